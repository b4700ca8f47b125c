"""Test-problem registry and the two bound-constrained minimization problems.

Three equation systems are fully evaluable: Brown's almost linear system,
Trigexp1 and the discretized Troesch boundary-value problem.  The other
twelve slots carry their dimension, box and source so a sweep can list
them, but requesting one raises :class:`NotTranscribedError`.

Residuals and Jacobians accept a single point ``(n,)`` or a batch
``(m, n)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .core import BoxBounds, NlsProblem, nudge_interior, strict_interior

logger = logging.getLogger(__name__)

FULLY_SPECIFIED = "fully_specified"
STUB = "stub_requires_transcription"


class NotTranscribedError(LookupError):
    """The requested registry entry has no formulas in this package."""


@dataclass(frozen=True)
class RegistryEntry:
    pb_number: int
    name: str
    dim: int
    box_printed: Tuple[str, str]
    status: str
    source: str
    note: str = ""

    @property
    def box(self) -> Optional[BoxBounds]:
        """The parsed box, or None when the printed box is absent or degenerate."""
        lo, hi = self.box_printed
        if lo == "-" or hi == "-":
            return None
        lo_v, hi_v = _parse_bound(lo), _parse_bound(hi)
        if not lo_v < hi_v:
            return None
        return BoxBounds.uniform(lo_v, hi_v, self.dim)

    def csv_line(self) -> str:
        return f"{self.pb_number},{self.name},{self.dim},{self.box_printed[0]},{self.box_printed[1]},{self.status}"


def _parse_bound(text: str) -> float:
    return float(text.replace("inf", "Infinity"))


REGISTRY = {
    e.pb_number: e
    for e in (
        RegistryEntry(1, "Bullard-Biegler system", 2, ("-", "-"), STUB, "Floudas et al. handbook, 14.1.3"),
        RegistryEntry(2, "Ferraris-Tronconi system", 2, ("-", "-"), STUB, "Floudas et al. handbook, 14.1.4"),
        RegistryEntry(3, "Brown's almost linear system", 5, ("-2", "2"), FULLY_SPECIFIED, "Floudas et al. handbook, 14.1.5"),
        RegistryEntry(4, "Robot kinematics problem", 8, ("-1", "1"), STUB, "Floudas et al. handbook, 14.1.6"),
        RegistryEntry(5, "Series of CSTRs R=.935", 2, ("0", "1"), STUB, "Floudas et al. handbook, 14.1.8"),
        RegistryEntry(6, "Series of CSTRs R=.995", 2, ("-inf", "inf"), STUB, "Floudas et al. handbook, 14.1.8"),
        RegistryEntry(7, "Chemical equilibrium system", 10, ("-", "-"), STUB, "Meintjes and Morgan, system 1"),
        RegistryEntry(8, "Problem HS34", 3, ("0", "100"), STUB, "Hock and Schittkowski no. 34, NCP form"),
        RegistryEntry(9, "Problem Wachter-Biegler", 3, ("0", "inf"), STUB, "Waechter and Biegler (2000), NCP form"),
        RegistryEntry(10, "Effati-Grosan 1 a=2", 2, ("-2", "2"), STUB, "Tsoulos and Stavrakoudis (2010)"),
        RegistryEntry(11, "Effati-Grosan 1 a=100", 2, ("-100", "100"), STUB, "Tsoulos and Stavrakoudis (2010)"),
        RegistryEntry(
            12, "Effati-Grosan 2 a=2", 2, ("-2", "-2"), STUB, "Tsoulos and Stavrakoudis (2010)",
            note="box printed as [-2,-2]; [-2,2] is the likely reading",
        ),
        RegistryEntry(13, "Effati-Grosan 2 a=100", 2, ("-100", "100"), STUB, "Tsoulos and Stavrakoudis (2010)"),
        RegistryEntry(14, "Trigexp1", 1000, ("-100", "100"), FULLY_SPECIFIED, "Luksan and Vlcek (1999)"),
        RegistryEntry(15, "Troesch", 500, ("-1", "1"), FULLY_SPECIFIED, "Luksan and Vlcek (1999)"),
    )
}


# ---------------------------------------------------------------------------
# Brown's almost linear system


def brown_residual(x):
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    F = x + x.sum(axis=-1, keepdims=True) - (n + 1)
    F[..., -1] = np.prod(x, axis=-1) - 1.0
    return F


def brown_jacobian(x):
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    J = np.ones(x.shape[:-1] + (n, n)) + np.eye(n)
    # d/dx_j prod(x) = prod_{k != j} x_k, computed without dividing by x_j
    for j in range(n):
        J[..., -1, j] = np.prod(np.delete(x, j, axis=-1), axis=-1)
    return J


def brown(n: int = 5, lo: float = -2.0, hi: float = 2.0) -> NlsProblem:
    return NlsProblem(
        id="pb3-brown",
        dim=n,
        residual=brown_residual,
        jacobian=brown_jacobian,
        box=BoxBounds.uniform(lo, hi, n),
        known_solution=np.ones(n),
        vectorized=True,
    )


# ---------------------------------------------------------------------------
# Trigexp1 (trigonometric-exponential system)


def trigexp_residual(x):
    x = np.asarray(x, dtype=float)
    F = np.empty_like(x)
    sq = np.sin(x) ** 2
    # sin(a - b) sin(a + b) == sin(a)^2 - sin(b)^2
    F[..., 0] = 3 * x[..., 0] ** 3 + 2 * x[..., 1] - 5 + sq[..., 0] - sq[..., 1]
    prev, cur, nxt = x[..., :-2], x[..., 1:-1], x[..., 2:]
    F[..., 1:-1] = (
        -prev * np.exp(prev - cur)
        + cur * (4 + 3 * cur**2)
        + 2 * nxt
        + sq[..., 1:-1]
        - sq[..., 2:]
        - 8
    )
    F[..., -1] = -x[..., -2] * np.exp(x[..., -2] - x[..., -1]) + 4 * x[..., -1] - 3
    return F


def trigexp_jacobian(x):
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    J = np.zeros(x.shape[:-1] + (n, n))
    s2 = np.sin(2 * x)
    idx = np.arange(n)
    e = np.exp(x[..., :-1] - x[..., 1:])  # e[i] = exp(x_i - x_{i+1})

    diag = np.empty_like(x)
    diag[..., 0] = 9 * x[..., 0] ** 2 + s2[..., 0]
    diag[..., 1:-1] = x[..., :-2] * e[..., :-1] + 4 + 9 * x[..., 1:-1] ** 2 + s2[..., 1:-1]
    diag[..., -1] = x[..., -2] * e[..., -1] + 4
    J[..., idx, idx] = diag
    # super-diagonal: equation i holds 2 x_{i+1} - sin^2 x_{i+1}
    J[..., idx[:-1], idx[1:]] = 2 - s2[..., 1:]
    # sub-diagonal: rows 1..n-1 depend on x_{i-1} through -x_{i-1} exp(x_{i-1} - x_i)
    J[..., idx[1:], idx[:-1]] = -e * (1 + x[..., :-1])
    return J


def trigexp1(n: int = 1000, lo: float = -100.0, hi: float = 100.0) -> NlsProblem:
    return NlsProblem(
        id="pb14-trigexp1",
        dim=n,
        residual=trigexp_residual,
        jacobian=trigexp_jacobian,
        box=BoxBounds.uniform(lo, hi, n),
        known_solution=np.ones(n),
        vectorized=True,
    )


# ---------------------------------------------------------------------------
# Troesch two-point boundary-value problem  y'' = rho sinh(rho y), y(0)=0, y(1)=1

TROESCH_RHO = 10.0


def _troesch_residual(x, rho):
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    h = 1.0 / (n + 1)
    left = np.concatenate([np.zeros(x.shape[:-1] + (1,)), x[..., :-1]], axis=-1)
    right = np.concatenate([x[..., 1:], np.ones(x.shape[:-1] + (1,))], axis=-1)
    return 2 * x - left - right + rho * h * h * np.sinh(rho * x)


def _troesch_jacobian(x, rho):
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    h = 1.0 / (n + 1)
    J = np.zeros(x.shape[:-1] + (n, n))
    idx = np.arange(n)
    J[..., idx, idx] = 2 + rho * rho * h * h * np.cosh(rho * x)
    J[..., idx[1:], idx[:-1]] = -1.0
    J[..., idx[:-1], idx[1:]] = -1.0
    return J


def troesch(n: int = 500, rho: float = TROESCH_RHO, lo: float = -1.0, hi: float = 1.0) -> NlsProblem:
    return NlsProblem(
        id="pb15-troesch",
        dim=n,
        residual=lambda x: _troesch_residual(x, rho),
        jacobian=lambda x: _troesch_jacobian(x, rho),
        box=BoxBounds.uniform(lo, hi, n),
        vectorized=True,
    )


_BUILDERS = {3: brown, 14: trigexp1, 15: troesch}


def get_problem(pb_number: int) -> NlsProblem:
    """Build registry problem ``pb_number`` at its tabulated size and box."""
    entry = REGISTRY.get(pb_number)
    if entry is None:
        raise KeyError(f"no problem Pb{pb_number}; valid numbers are 1..15")
    if entry.status != FULLY_SPECIFIED:
        raise NotTranscribedError(
            f"Pb{pb_number} ({entry.name}) is not transcribed; formulas are in: {entry.source}"
        )
    problem = _BUILDERS[pb_number]()
    assert problem.dim == entry.dim
    return problem


def runnable_problems() -> list:
    return [pb for pb, e in REGISTRY.items() if e.status == FULLY_SPECIFIED]


def starting_point(problem, v: int) -> np.ndarray:
    """Starting point number ``v`` (1, 2 or 3).

    Doubly bounded coordinates get ``l + 0.25 v (u - l)``.  A coordinate
    with an infinite side gets magnitude ``10**(v-1)``: positive when the
    coordinate is free or only bounded below, negative when only bounded
    above, shifted off the finite bound if it would fall outside.
    """
    if v not in (1, 2, 3):
        raise ValueError("starting point index must be 1, 2 or 3")
    box = problem.box if hasattr(problem, "box") else problem
    lower, upper = box.lower, box.upper
    fl, fu = box.finite_lower, box.finite_upper
    mag = 10.0 ** (v - 1)
    x = np.empty(box.n)
    both = fl & fu
    x[both] = lower[both] + 0.25 * v * (upper[both] - lower[both])
    free = ~fl & ~fu
    x[free] = mag
    below = fl & ~fu
    x[below] = np.where(mag > lower[below], mag, lower[below] + mag)
    above = ~fl & fu
    x[above] = np.where(-mag < upper[above], -mag, upper[above] - mag)
    if (~both).any():
        logger.info("starting point %d: infinite-bound coordinates set to +/-%g", v, mag)
    if not strict_interior(x, box):
        x = nudge_interior(x, box)
    return x


# ---------------------------------------------------------------------------
# bound-constrained minimization problems for the interior-point Newton method


@dataclass
class MinProblem:
    id: str
    dim: int
    objective: object
    gradient: object
    hessian: object
    box: BoxBounds
    known_minimizer: Optional[np.ndarray] = None
    x0: Optional[np.ndarray] = None


def _rosen_f(x):
    return 100.0 * (x[1] - x[0] ** 2) ** 2 + (1.0 - x[0]) ** 2


def _rosen_g(x):
    return np.array([
        -400.0 * x[0] * (x[1] - x[0] ** 2) - 2.0 * (1.0 - x[0]),
        200.0 * (x[1] - x[0] ** 2),
    ])


def _rosen_h(x):
    return np.array([
        [1200.0 * x[0] ** 2 - 400.0 * x[1] + 2.0, -400.0 * x[0]],
        [-400.0 * x[0], 200.0],
    ])


def rosenbrock() -> MinProblem:
    return MinProblem(
        id="rosenbrock",
        dim=2,
        objective=_rosen_f,
        gradient=_rosen_g,
        hessian=_rosen_h,
        box=BoxBounds(np.zeros(2), np.ones(2)),
        known_minimizer=np.ones(2),
        x0=np.full(2, 0.999),
    )


def _wood_f(x):
    x1, x2, x3, x4 = x
    return (
        100.0 * (x2 - x1**2) ** 2
        + (1.0 - x1) ** 2
        + 90.0 * (x4 - x3**2) ** 2
        + (1.0 - x3) ** 2
        + 10.0 * (x2 + x4 - 2.0) ** 2
        + 0.1 * (x2 - x4) ** 2
    )


def _wood_g(x):
    x1, x2, x3, x4 = x
    s = 20.0 * (x2 + x4 - 2.0)
    t = 0.2 * (x2 - x4)
    return np.array([
        -400.0 * x1 * (x2 - x1**2) - 2.0 * (1.0 - x1),
        200.0 * (x2 - x1**2) + s + t,
        -360.0 * x3 * (x4 - x3**2) - 2.0 * (1.0 - x3),
        180.0 * (x4 - x3**2) + s - t,
    ])


def _wood_h(x):
    x1, x2, x3, x4 = x
    return np.array([
        [1200.0 * x1**2 - 400.0 * x2 + 2.0, -400.0 * x1, 0.0, 0.0],
        [-400.0 * x1, 220.2, 0.0, 19.8],
        [0.0, 0.0, 1080.0 * x3**2 - 360.0 * x4 + 2.0, -360.0 * x3],
        [0.0, 19.8, -360.0 * x3, 200.2],
    ])


def wood() -> MinProblem:
    """Wood's function with the usual squared couplings ``(x2 - x1^2)^2``, ``(x4 - x3^2)^2``."""
    return MinProblem(
        id="wood",
        dim=4,
        objective=_wood_f,
        gradient=_wood_g,
        hessian=_wood_h,
        box=BoxBounds(np.array([1.0, 1.0, 1.0, 0.99]), np.full(4, 3.0)),
        known_minimizer=np.ones(4),
        x0=np.full(4, 1.001),
    )


MIN_PROBLEMS = {"rosenbrock": rosenbrock, "wood": wood}
