"""Projected affine-scaling interior-point Newton method for box-constrained minimization.

A local-convergence instrument: no line search or trust region, just the
scaled Newton system followed by a damped projection that keeps every
iterate strictly inside the box.  Comparing iteration counts across
scaling families near a degenerate minimizer (active bound, zero
gradient) is the point of the exercise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg

from .core import EvaluationError, strict_interior
from .problems import MinProblem
from .scaling import BOUND_BRANCHES, ScalingSpec, ScalingValue, scaled_gradient


@dataclass(frozen=True)
class IpConfig:
    max_iter: int = 100
    tol_distance: float = 1e-14
    tol_scaled_gradient: float = 1e-10
    sigma_min: float = 0.995

    def __post_init__(self):
        if not 0 < self.sigma_min < 1:
            raise ValueError("sigma_min must lie in (0, 1)")


@dataclass
class IpOutcome:
    iterations: int
    distance_history: List[float]
    converged: bool
    final_point: np.ndarray
    fallback_steps: int = 0
    points: List[np.ndarray] = field(default_factory=list, repr=False)

    def iterations_to(self, tol: float) -> Optional[int]:
        """First iteration index whose distance to the minimizer is <= tol."""
        for k, dist in enumerate(self.distance_history):
            if dist <= tol:
                return k
        return None


def affine_newton_step(x, g, H, d: ScalingValue):
    """Solve ``(diag(d) H + Theta) s = -diag(d) g``.

    ``Theta_ii = |g_i|`` on coordinates whose scaling branch is a pure
    distance to one bound, zero elsewhere.  Returns ``(s, used_fallback)``;
    on a singular system ``s`` is the scaled gradient ``-D g``.
    """
    g = np.asarray(g, dtype=float)
    H = np.asarray(H, dtype=float)
    if not np.any(g):
        return np.zeros_like(g), False
    dd = d.d
    theta = np.where(np.isin(d.branch_tags, BOUND_BRANCHES), np.abs(g), 0.0)
    M = dd[:, None] * H + np.diag(theta)
    try:
        with warnings.catch_warnings(), np.errstate(all="ignore"):
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            s = scipy.linalg.solve(M, -dd * g, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning, ValueError):
        return scaled_gradient(d, g), True
    if not np.all(np.isfinite(s)):
        return scaled_gradient(d, g), True
    return s, False


def damped_projection(x, s, box, sigma_min: float) -> np.ndarray:
    """Take ``x + s`` clipped to the box shrunk by ``1 - sigma`` around ``x``.

    ``sigma = max(sigma_min, 1 - ||s||)``.  Rounding that would land a
    coordinate on a bound is undone by stepping one ulp back inside.
    """
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    sigma = max(sigma_min, 1.0 - float(np.linalg.norm(s)))
    fl, fu = box.finite_lower, box.finite_upper
    with np.errstate(invalid="ignore"):
        lo = np.where(fl, box.lower + (1.0 - sigma) * (x - box.lower), -np.inf)
        hi = np.where(fu, box.upper - (1.0 - sigma) * (box.upper - x), np.inf)
    x_next = np.minimum(np.maximum(x + s, lo), hi)
    on_lower = fl & (x_next <= box.lower)
    on_upper = fu & (x_next >= box.upper)
    x_next[on_lower] = np.nextafter(box.lower[on_lower], np.inf)
    x_next[on_upper] = np.nextafter(box.upper[on_upper], -np.inf)
    return x_next


def minimize(problem: MinProblem, spec: ScalingSpec, x0=None, config: IpConfig = IpConfig()) -> IpOutcome:
    """Iterate ``x <- damped_projection(x, affine_newton_step(x))``.

    Stops once ``||x - x*|| <= tol_distance`` when the minimizer is known,
    otherwise once ``||D g|| <= tol_scaled_gradient``.
    """
    box = problem.box
    x = np.array(problem.x0 if x0 is None else x0, dtype=float)
    if not strict_interior(x, box):
        raise ValueError("starting point must be strictly interior")
    x_star = problem.known_minimizer
    history: List[float] = []
    points = [x.copy()]
    fallbacks = 0

    def distance(point):
        return float(np.linalg.norm(point - x_star)) if x_star is not None else math.nan

    history.append(distance(x))
    for k in range(config.max_iter + 1):
        if x_star is not None and history[-1] <= config.tol_distance:
            return IpOutcome(k, history, True, x, fallbacks, points)
        try:
            with np.errstate(all="ignore"):
                g = np.asarray(problem.gradient(x), dtype=float)
                H = np.asarray(problem.hessian(x), dtype=float)
            if not (np.all(np.isfinite(g)) and np.all(np.isfinite(H))):
                raise EvaluationError(problem.id)
        except EvaluationError:
            return IpOutcome(k, history, False, x, fallbacks, points)
        scaling = spec.evaluate(x, g, box)
        if x_star is None and np.linalg.norm(scaling.d * g) <= config.tol_scaled_gradient:
            return IpOutcome(k, history, True, x, fallbacks, points)
        if k == config.max_iter:
            break
        s, fell_back = affine_newton_step(x, g, H, scaling)
        fallbacks += fell_back
        x = damped_projection(x, s, box, config.sigma_min)
        points.append(x.copy())
        history.append(distance(x))
    return IpOutcome(config.max_iter, history, False, x, fallbacks, points)
