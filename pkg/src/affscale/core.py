"""Box geometry, problem containers and evaluation accounting.

Everything here is shared by the trust-region solver, the interior-point
Newton minimizer and the benchmark harness.  Vectors are dense float64
numpy arrays; infinite bounds are IEEE infinities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

FD_JACOBIAN = "finite-difference"

_EPS = np.finfo(float).eps


class EvaluationError(ArithmeticError):
    """A residual or derivative evaluation produced a non-finite value."""


class ContractViolation(ValueError):
    """An operation was called outside its documented precondition."""


@dataclass(frozen=True)
class BoxBounds:
    """Lower/upper bound vectors of the feasible box."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.array(self.lower, dtype=float).reshape(-1)
        upper = np.array(self.upper, dtype=float).reshape(-1)
        if lower.shape != upper.shape:
            raise ContractViolation("lower and upper bounds differ in length")
        if np.isnan(lower).any() or np.isnan(upper).any():
            raise ContractViolation("NaN in bounds")
        if np.isposinf(lower).any() or np.isneginf(upper).any():
            raise ContractViolation("+inf lower bound or -inf upper bound")
        if not np.all(lower < upper):
            raise ContractViolation("box has an empty interior")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def uniform(cls, lo: float, hi: float, n: int) -> "BoxBounds":
        return cls(np.full(n, lo, dtype=float), np.full(n, hi, dtype=float))

    @classmethod
    def unbounded(cls, n: int) -> "BoxBounds":
        return cls.uniform(-np.inf, np.inf, n)

    @property
    def n(self) -> int:
        return self.lower.size

    @property
    def finite_lower(self) -> np.ndarray:
        return np.isfinite(self.lower)

    @property
    def finite_upper(self) -> np.ndarray:
        return np.isfinite(self.upper)

    def widths(self) -> np.ndarray:
        """``min(1, u - l)`` on doubly bounded coordinates, 1 elsewhere."""
        w = np.ones(self.n)
        both = self.finite_lower & self.finite_upper
        w[both] = np.minimum(1.0, self.upper[both] - self.lower[both])
        return w


@dataclass
class EvalCounter:
    f_evals: int = 0
    jac_evals: int = 0


@dataclass
class NlsProblem:
    """Square system ``F(x) = 0`` restricted to a box.

    ``residual`` and an analytic ``jacobian`` may accept a batch of points
    with shape ``(m, n)`` when ``vectorized`` is true; the assumption
    checker uses that to stay fast.  ``jacobian`` may also be the marker
    :data:`FD_JACOBIAN`.
    """

    id: str
    dim: int
    residual: Callable[[np.ndarray], np.ndarray]
    jacobian: Union[Callable[[np.ndarray], np.ndarray], str]
    box: BoxBounds
    known_solution: Optional[np.ndarray] = None
    vectorized: bool = False
    counter: EvalCounter = field(default_factory=EvalCounter, repr=False)

    def __post_init__(self):
        if self.box.n != self.dim:
            raise ContractViolation(f"{self.id}: box length {self.box.n} != dim {self.dim}")

    @property
    def has_analytic_jacobian(self) -> bool:
        return callable(self.jacobian)

    def F(self, x: np.ndarray) -> np.ndarray:
        """Counted residual evaluation; raises EvaluationError on non-finite output."""
        self.counter.f_evals += 1
        with np.errstate(all="ignore"):
            value = np.asarray(self.residual(x), dtype=float)
        if not np.all(np.isfinite(value)):
            raise EvaluationError(f"{self.id}: non-finite residual")
        return value

    def J(self, x: np.ndarray, F_value: Optional[np.ndarray] = None) -> np.ndarray:
        """Counted Jacobian; falls back to forward differences."""
        if not self.has_analytic_jacobian:
            return fd_jacobian(self, x, F_value=F_value)
        self.counter.jac_evals += 1
        with np.errstate(all="ignore"):
            value = np.asarray(self.jacobian(x), dtype=float)
        if not np.all(np.isfinite(value)):
            raise EvaluationError(f"{self.id}: non-finite Jacobian")
        return value

    def reset_counter(self) -> EvalCounter:
        self.counter = EvalCounter()
        return self.counter


def merit(F_value) -> float:
    """Return ``0.5 * ||F||^2``."""
    F_value = np.asarray(F_value, dtype=float)
    if not np.all(np.isfinite(F_value)):
        raise EvaluationError("non-finite residual in merit")
    return 0.5 * float(F_value @ F_value)


def grad_f(J, F_value) -> np.ndarray:
    """Gradient of the merit function, ``J^T F``."""
    J = np.asarray(J, dtype=float)
    F_value = np.asarray(F_value, dtype=float)
    if J.shape[0] != F_value.shape[-1]:
        raise ContractViolation("Jacobian rows and residual length disagree")
    return J.T @ F_value


def fd_step(x: np.ndarray) -> np.ndarray:
    return np.sqrt(_EPS) * np.maximum(1.0, np.abs(x))


def fd_jacobian(problem: NlsProblem, x, h=None, F_value=None) -> np.ndarray:
    """Forward-difference Jacobian, charging ``n + 1`` residual evaluations.

    ``h`` may be a scalar or a per-coordinate vector; the default is
    ``sqrt(eps) * max(1, |x_i|)``.  Passing ``F_value`` at ``x`` still
    charges the base evaluation so the accounting stays ``n + 1``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    steps = fd_step(x) if h is None else np.broadcast_to(np.asarray(h, dtype=float), (n,))
    F0 = problem.F(x)
    if F_value is not None:
        F0 = np.asarray(F_value, dtype=float)
    J = np.empty((F0.size, n))
    for j in range(n):
        xj = x.copy()
        xj[j] += steps[j]
        J[:, j] = (problem.F(xj) - F0) / steps[j]
    return J


def max_step_to_boundary(x, d, box: BoxBounds) -> float:
    """Largest ``lam >= 0`` with ``x + lam * d`` in the closed box."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    if not strict_interior(x, box):
        raise ContractViolation("max_step_to_boundary needs a strictly interior point")
    return float(np.min(_exit_steps(x, d, box), initial=np.inf))


def _exit_steps(x, d, box):
    steps = np.full(x.shape, np.inf)
    up = (d > 0) & box.finite_upper
    down = (d < 0) & box.finite_lower
    with np.errstate(over="ignore"):
        steps[up] = (box.upper[up] - x[up]) / d[up]
        steps[down] = (box.lower[down] - x[down]) / d[down]
    return steps


def project_box(x, box: BoxBounds) -> np.ndarray:
    return np.clip(np.asarray(x, dtype=float), box.lower, box.upper)


def strict_interior(x, box: BoxBounds, margin: float = 0.0) -> bool:
    x = np.asarray(x, dtype=float)
    pad = margin * box.widths()
    lower_ok = np.where(box.finite_lower, x > box.lower + pad, True)
    upper_ok = np.where(box.finite_upper, x < box.upper - pad, True)
    return bool(np.all(lower_ok & upper_ok) and np.all(np.isfinite(x)))


def nudge_interior(x, box: BoxBounds, fraction: float = 1e-3) -> np.ndarray:
    """Project onto the box, then push active coordinates inward.

    Each coordinate sitting on a finite bound moves by
    ``fraction * min(1, u_i - l_i)``.
    """
    x = project_box(x, box)
    shift = fraction * box.widths()
    at_lower = box.finite_lower & (x <= box.lower)
    at_upper = box.finite_upper & (x >= box.upper)
    x[at_lower] = box.lower[at_lower] + shift[at_lower]
    x[at_upper] = box.upper[at_upper] - shift[at_upper]
    return x
