"""Dolan-More performance profiles and their nested (subset-averaged) variant.

For a problem instance ``p`` and scaling ``s`` the cost ``c[p, s]`` is It
or Fe, infinite when the run failed.  The ratio to the best scaling on
``p`` is ``r[p, s] = c[p, s] / min_s c[p, s]``, and the profile of ``s``
at ``tau`` is the fraction of instances with ``r[p, s] <= tau``.

Zero costs occur (a start that is already a root takes 0 iterations);
equal costs give ratio 1 and a positive cost against a zero best gives
an infinite ratio.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

NESTED_RULE = "subset-mean"


@dataclass
class ProfileCurve:
    scaling_id: str
    breakpoints: List[Tuple[float, float]]
    metric: str
    meta: Dict[str, str] = field(default_factory=dict)

    def value_at(self, tau: float) -> float:
        value = 0.0
        for t, frac in self.breakpoints:
            if t > tau:
                break
            value = frac
        return value


def cost_table(records, metric: str, solved_statuses=("converged",), failures: str = "inf"):
    """Return ``(instances, scalings, costs)`` with ``costs[p, s]``.

    ``failures="exclude"`` drops every instance on which some scaling
    failed; ``"inf"`` keeps them with infinite cost.
    """
    if metric not in ("it", "fe"):
        raise ValueError(f"metric must be 'it' or 'fe', not {metric!r}")
    if failures not in ("inf", "exclude"):
        raise ValueError("failures must be 'inf' or 'exclude'")
    records = list(records)
    if not records:
        raise ValueError("no records to profile")
    instances = sorted({(r.pb, r.start) for r in records})
    scalings = list(dict.fromkeys(r.scaling for r in records))
    lookup = {}
    for r in records:
        lookup[(r.pb, r.start, r.scaling)] = r
    costs = np.empty((len(instances), len(scalings)))
    for i, inst in enumerate(instances):
        for j, s in enumerate(scalings):
            rec = lookup.get(inst + (s,))
            if rec is None:
                raise ValueError(f"records do not cover instance {inst} for scaling {s}")
            costs[i, j] = getattr(rec, metric) if rec.status in solved_statuses else math.inf
    if failures == "exclude":
        keep = np.all(np.isfinite(costs), axis=1)
        instances = [inst for inst, k in zip(instances, keep) if k]
        costs = costs[keep]
    return instances, scalings, costs


def ratio_table(costs: np.ndarray) -> np.ndarray:
    best = costs.min(axis=1, initial=math.inf, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = costs / best
    r = np.where(costs == best, 1.0, r)
    r = np.where(np.isfinite(costs), r, math.inf)
    return r


def _grid(ratio_tables) -> List[float]:
    taus = {1.0}
    for r in ratio_tables:
        taus.update(float(v) for v in r[np.isfinite(r)])
    return sorted(taus)


def _fractions(column: np.ndarray, taus: Sequence[float], total: int) -> List[float]:
    if total == 0:
        return [0.0] * len(taus)
    return [float(np.count_nonzero(column <= tau)) / total for tau in taus]


def perf_profile(records, metric: str, solved_statuses=("converged",), failures: str = "inf") -> List[ProfileCurve]:
    """One curve per scaling, all sharing the breakpoints of every finite ratio."""
    instances, scalings, costs = cost_table(records, metric, solved_statuses, failures)
    r = ratio_table(costs)
    taus = _grid([r])
    total = len(instances)
    return [
        ProfileCurve(s, list(zip(taus, _fractions(r[:, j], taus, total))), metric, {"failures": failures})
        for j, s in enumerate(scalings)
    ]


def nested_perf_profile(records, metric: str, solved_statuses=("converged",), failures: str = "inf") -> List[ProfileCurve]:
    """Average each scaling's profile over every subset (size >= 2) containing it."""
    instances, scalings, costs = cost_table(records, metric, solved_statuses, failures)
    m = len(scalings)
    if m < 2:
        raise ValueError("nested profiles need at least two scalings")
    total = len(instances)
    subsets = [S for size in range(2, m + 1) for S in itertools.combinations(range(m), size)]
    ratios = {S: ratio_table(costs[:, S]) for S in subsets}
    taus = _grid(ratios.values())

    curves = []
    for j, s in enumerate(scalings):
        member = [(S, S.index(j)) for S in subsets if j in S]
        per_subset = [_fractions(ratios[S][:, col], taus, total) for S, col in member]
        values = [math.fsum(vals) / len(member) for vals in zip(*per_subset)]
        curves.append(
            ProfileCurve(s, list(zip(taus, values)), metric, {"failures": failures, "nested_rule": NESTED_RULE})
        )
    return curves
