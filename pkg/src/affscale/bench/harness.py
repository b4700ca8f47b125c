"""Problem x starting point x scaling sweeps."""

from __future__ import annotations

import csv
import dataclasses
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from ..core import EvalCounter, NlsProblem
from ..dogleg import Status, TrustRegionConfig, solve
from ..problems import get_problem, starting_point
from ..scaling import ScalingSpec

RECORD_HEADER = ["pb", "start", "scaling", "status", "it", "fe", "final_residual", "wall_ms", "seed"]

# start index used for records averaged over the three starting points
MEAN_START = 0


@dataclass
class RunRecord:
    pb: int
    start: int
    scaling: str
    status: str
    it: float
    fe: float
    final_residual: float
    wall_ms: float = 0.0
    seed: int = 0
    trace: Optional[list] = field(default=None, repr=False, compare=False)

    @property
    def converged(self) -> bool:
        return self.status == Status.CONVERGED.value

    @property
    def key(self):
        return (self.pb, self.start, self.scaling)

    def row(self) -> list:
        return [
            str(self.pb),
            "mean" if self.start == MEAN_START else str(self.start),
            self.scaling,
            self.status,
            _count(self.it),
            _count(self.fe),
            f"{self.final_residual:.6e}",
            f"{self.wall_ms:.3f}",
            str(self.seed),
        ]

    @classmethod
    def from_row(cls, row: dict) -> "RunRecord":
        start = row["start"]
        return cls(
            pb=int(row["pb"]),
            start=MEAN_START if start == "mean" else int(start),
            scaling=row["scaling"],
            status=row["status"],
            it=float(row["it"]),
            fe=float(row["fe"]),
            final_residual=float(row["final_residual"]),
            wall_ms=float(row["wall_ms"]),
            seed=int(row["seed"]),
        )


def _count(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else f"{value:.6f}"


def _fresh(problem: Union[int, NlsProblem]) -> NlsProblem:
    if isinstance(problem, NlsProblem):
        return dataclasses.replace(problem, counter=EvalCounter())
    return get_problem(int(problem))


def _pb_number(problem: Union[int, NlsProblem]) -> int:
    if isinstance(problem, NlsProblem):
        head = problem.id.split("-")[0]
        return int(head[2:]) if head.startswith("pb") and head[2:].isdigit() else 0
    return int(problem)


def run_cell(problem, start: int, spec: ScalingSpec, config: TrustRegionConfig,
             seed: int = 0, timing: bool = False, keep_trace: bool = False) -> RunRecord:
    """Solve one (problem, start, scaling) cell; failures become record content."""
    prob = _fresh(problem)
    x0 = starting_point(prob, start)
    tic = time.perf_counter()
    outcome = solve(prob, spec, x0, config, keep_trace=keep_trace)
    wall = (time.perf_counter() - tic) * 1e3 if timing else 0.0
    return RunRecord(
        pb=_pb_number(problem),
        start=start,
        scaling=spec.id,
        status=outcome.status.value,
        it=outcome.iterations,
        fe=outcome.fevals,
        final_residual=outcome.final_residual_norm,
        wall_ms=wall,
        seed=seed,
        trace=outcome.trace,
    )


def run_matrix(
    problems: Iterable,
    starts: Sequence[int],
    scalings: Sequence[ScalingSpec],
    config: TrustRegionConfig = TrustRegionConfig(),
    *,
    jobs: int = 1,
    seed: int = 0,
    timing: bool = False,
    keep_traces: bool = False,
) -> List[RunRecord]:
    """Run every cell and return records sorted by (pb, start, scaling).

    ``problems`` holds registry numbers or :class:`NlsProblem` instances;
    each cell works on its own copy so cells can run on ``jobs`` threads.
    Wall times are recorded only with ``timing=True`` since they would
    otherwise break byte-for-byte reproducibility of the output.
    """
    cells = [(p, v, s) for p in problems for v in starts for s in scalings]

    def run(cell):
        p, v, s = cell
        return run_cell(p, v, s, config, seed=seed, timing=timing, keep_trace=keep_traces)

    if jobs <= 1:
        records = [run(c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(run, cells))
    records.sort(key=lambda r: r.key)
    return records


def aggregate_mean_over_starts(records: Sequence[RunRecord]) -> List[RunRecord]:
    """Average It and Fe over starting points per (pb, scaling).

    A group with any unsolved start keeps the first failing status.
    """
    groups = {}
    for rec in records:
        groups.setdefault((rec.pb, rec.scaling), []).append(rec)
    out = []
    for (pb, scaling), recs in sorted(groups.items()):
        recs = sorted(recs, key=lambda r: r.start)
        failed = [r for r in recs if not r.converged]
        out.append(
            RunRecord(
                pb=pb,
                start=MEAN_START,
                scaling=scaling,
                status=failed[0].status if failed else Status.CONVERGED.value,
                it=float(np.mean([r.it for r in recs])),
                fe=float(np.mean([r.fe for r in recs])),
                final_residual=max(r.final_residual for r in recs),
                wall_ms=float(sum(r.wall_ms for r in recs)),
                seed=recs[0].seed,
            )
        )
    return out


def write_records(records: Sequence[RunRecord], path) -> None:
    if not records:
        raise ValueError("no records to write")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_HEADER)
        for rec in records:
            writer.writerow(rec.row())


def read_records(path) -> List[RunRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RECORD_HEADER:
            raise ValueError(f"{path}: expected header {','.join(RECORD_HEADER)}")
        return [RunRecord.from_row(row) for row in reader]
