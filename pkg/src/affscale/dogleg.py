"""Constrained dogleg trust-region solver for box-constrained equations.

Each outer iteration builds the exact Newton step, a scaled-gradient
Cauchy step kept inside the box by a fraction-to-the-boundary rule, and
walks the segment between them until it leaves either the (elliptical)
trust region or the shrunken box around the current iterate.  Rejected
trial points shrink the radius and retry without advancing the iteration
count, so ``It`` counts accepted steps and ``Fe`` counts every residual
evaluation.
"""

from __future__ import annotations

import enum
import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass
from typing import List, Optional, TextIO, Tuple

import numpy as np
import scipy.linalg

from .core import (
    BoxBounds,
    EvaluationError,
    NlsProblem,
    grad_f,
    nudge_interior,
    strict_interior,
)
from .scaling import ScalingSpec, metric_G, scaled_gradient

logger = logging.getLogger(__name__)

PIVOT_RTOL = 1e-14
SOLVE_RTOL = 1e-8
STALL_TOL = 1e-14
PRED_FLOOR = 1e-30


class Status(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    MAX_FEVALS = "max_fevals"
    TRUST_REGION_COLLAPSE = "trust_region_collapse"
    SINGULAR_JACOBIAN = "singular_jacobian"
    EVAL_FAILURE = "eval_failure"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class TrustRegionConfig:
    delta0: float = 1.0
    max_iter: int = 300
    max_fevals: int = 1000
    tol_residual: float = 1e-6
    theta: float = 0.99995
    eta_accept: float = 0.1
    eta_expand: float = 0.75
    shrink: float = 0.25
    expand: float = 2.0
    delta_min: float = 1e-12
    metric: str = "elliptical"

    def __post_init__(self):
        if not 0 < self.eta_accept < self.eta_expand < 1:
            raise ValueError("need 0 < eta_accept < eta_expand < 1")
        if not 0 < self.shrink < 1 < self.expand:
            raise ValueError("need 0 < shrink < 1 < expand")
        if not 0 < self.theta < 1:
            raise ValueError("need 0 < theta < 1")
        if self.delta0 <= 0:
            raise ValueError("delta0 must be positive")
        if self.metric not in ("elliptical", "spherical"):
            raise ValueError(f"unknown metric {self.metric!r}")


@dataclass
class IterationRecord:
    """One trial step.  ``k`` is the outer iteration the trial belongs to."""

    k: int
    residual_norm: float
    delta: float
    step_kind: str
    rho: float
    accepted: bool
    step_norm_G: float = 0.0
    trial_residual_norm: float = math.nan
    interior_margin: float = math.inf

    def to_json(self) -> str:
        return json.dumps(asdict(self), allow_nan=True)


@dataclass
class SolveOutcome:
    status: Status
    iterations: int
    fevals: int
    final_point: np.ndarray
    final_residual_norm: float
    trace: Optional[List[IterationRecord]] = None
    jac_evals: int = 0
    singular_steps: int = 0

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def newton_step(J, F_value) -> Optional[np.ndarray]:
    """Solve ``J p = -F`` by LU with partial pivoting.

    Returns None when a pivot falls below ``1e-14 * ||J||_inf`` or the
    solve residual exceeds ``1e-8 * ||F||``.
    """
    J = np.asarray(J, dtype=float)
    F_value = np.asarray(F_value, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ValueError("Newton step needs a square Jacobian")
    norm_J = np.linalg.norm(J, np.inf)
    if norm_J == 0.0:
        return None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(J, check_finite=False)
    if np.min(np.abs(np.diag(lu))) < PIVOT_RTOL * norm_J:
        return None
    p = scipy.linalg.lu_solve((lu, piv), -F_value, check_finite=False)
    if not np.all(np.isfinite(p)):
        return None
    if np.linalg.norm(J @ p + F_value) > SOLVE_RTOL * np.linalg.norm(F_value):
        return None
    return p


def _shrunk_box_limits(x, box: BoxBounds, theta):
    """Step limits keeping ``x + p`` inside the theta-shrunk box around ``x``."""
    with np.errstate(invalid="ignore"):
        lo = np.where(box.finite_lower, -theta * (x - box.lower), -np.inf)
        hi = np.where(box.finite_upper, theta * (box.upper - x), np.inf)
    return lo, hi


def _max_fraction(start, direction, lo, hi):
    """Largest t >= 0 with ``lo <= start + t * direction <= hi`` (may be inf)."""
    t = np.full(start.shape, np.inf)
    up = direction > 0
    down = direction < 0
    t[up] = (hi[up] - start[up]) / direction[up]
    t[down] = (lo[down] - start[down]) / direction[down]
    return max(0.0, float(np.min(t, initial=np.inf)))


def cauchy_step(x, F_value, J, d, G, delta, box: BoxBounds, theta) -> np.ndarray:
    """Minimizer of the linear model along the scaled gradient, safeguarded.

    ``t = min(t_model, delta / ||G ghat||, theta * lambda_boundary)``.
    """
    x = np.asarray(x, dtype=float)
    g = grad_f(J, F_value)
    ghat = scaled_gradient(d, g)
    Jg = J @ ghat
    denom = float(Jg @ Jg)
    if denom == 0.0 or not np.any(ghat):
        return np.zeros_like(x)
    t_model = -float(F_value @ Jg) / denom
    norm_G = float(np.linalg.norm(G * ghat))
    t_radius = delta / norm_G if norm_G > 0 else math.inf
    lo, hi = _shrunk_box_limits(x, box, theta)
    t_box = _max_fraction(np.zeros_like(x), ghat, lo, hi)
    t = max(0.0, min(t_model, t_radius, t_box))
    return t * ghat


def _radius_fraction(pC, direction, G, delta):
    """Largest tau >= 0 with ``||G (pC + tau * direction)|| <= delta``."""
    a_vec = G * direction
    b_vec = G * pC
    a = float(a_vec @ a_vec)
    b = 2.0 * float(a_vec @ b_vec)
    c = float(b_vec @ b_vec) - delta * delta
    if c >= 0.0:
        return 0.0
    if a == 0.0:
        return math.inf
    disc = b * b - 4.0 * a * c
    # c < 0 guarantees one positive root; this form avoids cancellation
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    roots = [r for r in (q / a, c / q if q != 0 else math.inf) if r >= 0]
    return max(roots) if roots else 0.0


def dogleg_step(p_N, p_C, x, box: BoxBounds, G, delta, theta) -> Tuple[np.ndarray, str]:
    """Pick the step along the Cauchy-to-Newton segment.

    The Newton step is taken whole when it fits in the trust region and in
    the theta-shrunk box around ``x``.  Otherwise the segment
    ``p_C + tau (p_N - p_C)`` is cut at the largest ``tau in [0, 1]``
    satisfying both constraints.
    """
    x = np.asarray(x, dtype=float)
    if p_N is None:
        return p_C, "cauchy"
    lo, hi = _shrunk_box_limits(x, box, theta)
    newton_fits = float(np.linalg.norm(G * p_N)) <= delta and bool(np.all((p_N >= lo) & (p_N <= hi)))
    if newton_fits:
        return p_N, "newton"
    direction = p_N - p_C
    tau = min(
        1.0,
        _radius_fraction(p_C, direction, G, delta),
        _max_fraction(p_C, direction, lo, hi),
    )
    if tau <= 0.0:
        return p_C, "cauchy"
    return p_C + tau * direction, "dogleg"


def tr_update(rho, delta, step_norm_G, config: TrustRegionConfig) -> float:
    if rho < config.eta_accept:
        return config.shrink * step_norm_G
    if rho < config.eta_expand:
        return delta
    return max(delta, config.expand * step_norm_G)


def _interior_margin(x, box: BoxBounds) -> float:
    with np.errstate(invalid="ignore"):
        lower = np.where(box.finite_lower, x - box.lower, np.inf)
        upper = np.where(box.finite_upper, box.upper - x, np.inf)
    return float(min(lower.min(initial=np.inf), upper.min(initial=np.inf)))


def solve(
    problem: NlsProblem,
    spec: ScalingSpec,
    x0,
    config: TrustRegionConfig = TrustRegionConfig(),
    *,
    keep_trace: bool = False,
    trace_stream: Optional[TextIO] = None,
) -> SolveOutcome:
    """Run the constrained dogleg method from ``x0``.

    Never raises for numerical trouble; every failure mode maps to a
    :class:`Status`.  ``trace_stream`` receives one JSON line per trial.
    """
    box = problem.box
    counter = problem.reset_counter()
    x = np.array(x0, dtype=float)
    if not strict_interior(x, box):
        x = nudge_interior(x, box)
    trace: Optional[List[IterationRecord]] = [] if keep_trace else None
    spherical = config.metric == "spherical"

    def emit(rec: IterationRecord):
        if trace is not None:
            trace.append(rec)
        if trace_stream is not None:
            trace_stream.write(rec.to_json() + "\n")

    def outcome(status, F_norm):
        return SolveOutcome(
            status=status,
            iterations=k,
            fevals=counter.f_evals,
            final_point=x,
            final_residual_norm=F_norm,
            trace=trace,
            jac_evals=counter.jac_evals,
            singular_steps=singular_steps,
        )

    k = 0
    singular_steps = 0
    try:
        F = problem.F(x)
    except EvaluationError:
        return outcome(Status.EVAL_FAILURE, math.nan)
    F_norm = float(np.linalg.norm(F))
    delta = config.delta0

    while True:
        if F_norm <= config.tol_residual:
            return outcome(Status.CONVERGED, F_norm)
        if k >= config.max_iter:
            return outcome(Status.MAX_ITERATIONS, F_norm)
        if counter.f_evals >= config.max_fevals:
            return outcome(Status.MAX_FEVALS, F_norm)
        try:
            J = problem.J(x, F)
        except EvaluationError:
            return outcome(Status.EVAL_FAILURE, F_norm)

        g = grad_f(J, F)
        scaling = spec.evaluate(x, g, box)
        ghat = scaled_gradient(scaling, g)
        p_N = newton_step(J, F)
        if p_N is None:
            singular_steps += 1
            # no Newton step and no usable Cauchy direction either
            if np.linalg.norm(ghat) <= STALL_TOL:
                return outcome(Status.SINGULAR_JACOBIAN, F_norm)
        G = np.ones_like(x) if spherical else metric_G(scaling)

        while True:
            p_C = cauchy_step(x, F, J, scaling, G, delta, box, config.theta)
            p, kind = dogleg_step(p_N, p_C, x, box, G, delta, config.theta)
            step_norm_G = float(np.linalg.norm(G * p))
            pred = F_norm - float(np.linalg.norm(F + J @ p))
            if counter.f_evals >= config.max_fevals:
                return outcome(Status.MAX_FEVALS, F_norm)
            trial = x + p
            try:
                F_trial = problem.F(trial)
                trial_norm = float(np.linalg.norm(F_trial))
            except EvaluationError:
                F_trial, trial_norm = None, math.inf
            if pred > PRED_FLOOR:
                rho = (F_norm - trial_norm) / pred
            else:
                rho = -math.inf
            accepted = rho >= config.eta_accept
            emit(
                IterationRecord(
                    k=k,
                    residual_norm=F_norm,
                    delta=delta,
                    step_kind=kind,
                    rho=rho,
                    accepted=accepted,
                    step_norm_G=step_norm_G,
                    trial_residual_norm=trial_norm,
                    interior_margin=_interior_margin(trial, box),
                )
            )
            delta = tr_update(rho, delta, step_norm_G, config)
            if accepted:
                break
            if delta < config.delta_min:
                return outcome(Status.TRUST_REGION_COLLAPSE, F_norm)

        x, F, F_norm = trial, F_trial, trial_norm
        k += 1
        logger.debug("k=%d |F|=%.3e delta=%.3e kind=%s", k, F_norm, delta, kind)
