import csv
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import brute_force_nested, brute_force_profile

from affscale.bench import (
    ProfileCurve,
    RunRecord,
    aggregate_mean_over_starts,
    emit_csv,
    emit_svg,
    nested_perf_profile,
    perf_profile,
    read_records,
    run_matrix,
    write_curves,
    write_records,
)
from affscale.scaling import paper7

INF = math.inf


def records_from_costs(costs, names=None, metric="it"):
    """One record per (instance, scaling); ``inf`` cost marks a failed run."""
    names = names or [f"s{j}" for j in range(len(costs[0]))]
    out = []
    for i, row in enumerate(costs):
        for name, c in zip(names, row):
            failed = c == INF
            value = 0 if failed else c
            out.append(
                RunRecord(
                    pb=i + 1,
                    start=1,
                    scaling=name,
                    status="max_iterations" if failed else "converged",
                    it=value if metric == "it" else 1,
                    fe=value if metric == "fe" else 1,
                    final_residual=0.0,
                )
            )
    return out


def by_name(curves):
    return {c.scaling_id: c for c in curves}


HAND = [[2, 4], [10, 5]]


class TestPerfProfile:
    def test_hand_example(self):
        curves = by_name(perf_profile(records_from_costs(HAND, ["A", "B"]), "it"))
        assert curves["A"].breakpoints == [(1.0, 0.5), (2.0, 1.0)]
        assert curves["B"].breakpoints == [(1.0, 0.5), (2.0, 1.0)]

    def test_failing_everywhere_is_zero(self):
        curves = by_name(perf_profile(records_from_costs([[1, INF], [3, INF]], ["A", "B"]), "it"))
        assert all(frac == 0.0 for _, frac in curves["B"].breakpoints)

    def test_single_scaling(self):
        (curve,) = perf_profile(records_from_costs([[3], [7], [INF]], ["A"]), "it")
        assert {frac for _, frac in curve.breakpoints} == {2 / 3}

    def test_fe_metric(self):
        curves = by_name(perf_profile(records_from_costs(HAND, ["A", "B"], metric="fe"), "fe"))
        assert curves["A"].breakpoints == [(1.0, 0.5), (2.0, 1.0)]
        assert curves["A"].metric == "fe"

    def test_zero_cost(self):
        # a start that is already a root: equal zero costs tie, positive cost against zero never catches up
        curves = by_name(perf_profile(records_from_costs([[0, 0, 3], [2, 4, 2]], ["A", "B", "C"]), "it"))
        assert curves["A"].value_at(1.0) == 1.0
        assert curves["C"].value_at(1e9) == 0.5

    def test_exclude_failures(self):
        recs = records_from_costs([[1, 2], [5, INF], [4, 4]], ["A", "B"])
        curves = by_name(perf_profile(recs, "it", failures="exclude"))
        assert curves["B"].breakpoints[-1][1] == 1.0
        assert by_name(perf_profile(recs, "it"))["B"].breakpoints[-1][1] == pytest.approx(2 / 3)

    def test_errors(self):
        with pytest.raises(ValueError):
            perf_profile([], "it")
        with pytest.raises(ValueError):
            perf_profile(records_from_costs(HAND)[:-1], "it")
        with pytest.raises(ValueError):
            perf_profile(records_from_costs(HAND), "wall")

    @given(
        st.lists(st.lists(st.one_of(st.integers(1, 50), st.just(INF)), min_size=3, max_size=3), min_size=1, max_size=8),
        st.permutations(range(3)),
        st.integers(2, 9),
    )
    @settings(max_examples=100, deadline=None)
    def test_properties(self, costs, perm, factor):
        names = ["A", "B", "C"]
        curves = by_name(perf_profile(records_from_costs(costs, names), "it"))
        taus = sorted({t for c in curves.values() for t, _ in c.breakpoints} | {1.0, 1.5, 1e6})
        oracle = brute_force_profile(costs, taus)
        for j, name in enumerate(names):
            values = [curves[name].value_at(t) for t in taus]
            assert values == oracle[j]
            assert all(0.0 <= v <= 1.0 for v in values)
            assert values == sorted(values)
            solved = sum(row[j] != INF for row in costs)
            assert curves[name].breakpoints[-1][1] == solved / len(costs)
        # ties at tau = 1 all count; compare instance counts, not summed fractions
        if all(min(row) < INF for row in costs):
            assert sum(round(c.value_at(1.0) * len(costs)) for c in curves.values()) >= len(costs)
        # relabel scalings and instances
        shuffled = [[row[p] for p in perm] for row in reversed(costs)]
        relabeled = by_name(perf_profile(records_from_costs(shuffled, [names[p] for p in perm]), "it"))
        for name in names:
            assert [relabeled[name].value_at(t) for t in taus] == [curves[name].value_at(t) for t in taus]
        # scale-free
        scaled = by_name(perf_profile(records_from_costs([[c * factor for c in row] for row in costs], names), "it"))
        for name in names:
            assert scaled[name].breakpoints == curves[name].breakpoints


class TestNestedProfile:
    def test_two_scalings_bitwise(self):
        rng = np.random.default_rng(0)
        costs = rng.integers(1, 40, size=(12, 2)).tolist()
        costs[3][1] = INF
        recs = records_from_costs(costs, ["A", "B"])
        basic = perf_profile(recs, "it")
        nested = nested_perf_profile(recs, "it")
        for b, n in zip(basic, nested):
            assert b.breakpoints == n.breakpoints

    def test_brute_force_three(self):
        costs = [[3, 5, 9], [4, 4, INF], [10, 2, 6]]
        curves = nested_perf_profile(records_from_costs(costs, ["A", "B", "C"]), "it")
        taus = sorted({t for c in curves for t, _ in c.breakpoints} | {1.25, 100.0})
        oracle = brute_force_nested(costs, taus)
        for j, c in enumerate(curves):
            np.testing.assert_allclose([c.value_at(t) for t in taus], oracle[j], rtol=0, atol=1e-15)
        assert curves[0].meta["nested_rule"] == "subset-mean"

    def test_dominated_scaling(self):
        costs = [[2, 3, 9], [5, 4, 8], [1, 1, 7]]
        recs = records_from_costs(costs, ["A", "B", "C"])
        basic = by_name(perf_profile(recs, "it"))
        nested = by_name(nested_perf_profile(recs, "it"))
        assert nested["C"].value_at(1.0) <= basic["C"].value_at(1.0)

    def test_symmetric(self):
        curves = nested_perf_profile(records_from_costs([[4, 4, 4], [7, 7, 7]]), "it")
        assert curves[0].breakpoints == curves[1].breakpoints == curves[2].breakpoints

    def test_needs_two(self):
        with pytest.raises(ValueError):
            nested_perf_profile(records_from_costs([[1], [2]]), "it")


@pytest.fixture(scope="module")
def pb3_records():
    return run_matrix([3], [1, 2, 3], paper7())


class TestHarness:
    def test_cardinality(self, pb3_records):
        assert len(pb3_records) == 21

    def test_first_start_all_converge(self, pb3_records):
        assert all(r.converged for r in pb3_records if r.start == 1)

    def test_sorted(self, pb3_records):
        keys = [r.key for r in pb3_records]
        assert keys == sorted(keys)

    def test_parallel_matches_serial(self, pb3_records, tmp_path):
        parallel = run_matrix([3], [1, 2, 3], paper7(), jobs=4)
        write_records(pb3_records, tmp_path / "a.csv")
        write_records(parallel, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_csv_round_trip(self, pb3_records, tmp_path):
        path = tmp_path / "records.csv"
        emit_csv(pb3_records, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "pb,start,scaling,status,it,fe,final_residual,wall_ms,seed"
        assert len(lines) == 22
        back = read_records(path)
        assert [(r.key, r.it, r.fe, r.status) for r in back] == [(r.key, r.it, r.fe, r.status) for r in pb3_records]

    def test_failures_are_records(self):
        from affscale.dogleg import TrustRegionConfig

        recs = run_matrix([3], [1], paper7()[:2], TrustRegionConfig(max_iter=1))
        assert len(recs) == 2
        assert {r.status for r in recs} == {"max_iterations"}

    def test_aggregate(self):
        recs = records_from_costs([[2, 4], [6, INF]], ["A", "B"])
        for r, start in zip(recs, [1, 1, 2, 2]):
            r.pb, r.start = 3, start
        agg = {r.scaling: r for r in aggregate_mean_over_starts(recs)}
        assert agg["A"].it == 4.0 and agg["A"].converged
        assert not agg["B"].converged
        assert agg["A"].row()[1] == "mean"

    def test_read_rejects_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            read_records(path)


class TestOutput:
    def curves(self):
        return perf_profile(records_from_costs(HAND, ["A", "B"]), "it")

    def test_curves_csv(self, tmp_path):
        path = tmp_path / "curves.csv"
        write_curves(self.curves(), path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["scaling", "metric", "tau", "fraction"]
        assert rows[1:3] == [["A", "it", "1", "0.5"], ["A", "it", "2", "1"]]
        assert (tmp_path / "curves.csv.meta.json").exists()

    def test_svg(self, tmp_path):
        path = tmp_path / "plot.svg"
        emit_svg(self.curves(), path, title="hand example")
        root = ET.parse(path).getroot()
        ns = {"svg": "http://www.w3.org/2000/svg"}
        lines = root.findall("svg:polyline", ns)
        assert len(lines) == 2
        for line in lines:
            pts = [tuple(map(float, p.split(","))) for p in line.get("points").split()]
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            assert xs == sorted(xs)
            # fractions only grow, so screen y only falls
            assert ys == sorted(ys, reverse=True)
        assert "hand example" in path.read_text()

    def test_empty_inputs(self, tmp_path):
        with pytest.raises(ValueError):
            emit_svg([], tmp_path / "x.svg")
        with pytest.raises(ValueError):
            emit_csv([], tmp_path / "x.csv")

    def test_unwritable(self, tmp_path):
        with pytest.raises(OSError):
            emit_csv(self.curves(), tmp_path / "missing" / "curves.csv")

    def test_curve_type(self):
        assert isinstance(self.curves()[0], ProfileCurve)
