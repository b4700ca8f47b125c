"""Diagonal affine-scaling matrices for box-constrained problems.

Four classical families are provided (Coleman-Li, Heinkenschloss-Ulbrich-
Ulbrich, Kanzow-Klug, Hager-Mair-Zhang) together with their convex
combination.  Every family returns a :class:`ScalingValue` holding the
diagonal ``d`` and a per-coordinate branch tag.

All scaling functions broadcast over leading axes: ``x`` and ``g`` may be
``(n,)`` or ``(m, n)`` arrays and the bounds broadcast against them.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .core import BoxBounds, ContractViolation, NlsProblem, fd_jacobian

FAMILIES = ("CL", "HUU", "KK", "HMZ", "CON")
ZERO_GRADIENT_RTOL = 1e-14
WEIGHT_SUM_TOL = 1e-12
METRIC_FLOOR = 1e-12


class Branch(enum.IntEnum):
    FREE = 0
    LOWER = 1
    UPPER = 2
    MIN_DISTANCE = 3


# Branches whose diagonal is a pure distance to one bound selected by the
# gradient sign; the interior-point Newton system adds |g_i| for these.
BOUND_BRANCHES = (Branch.LOWER, Branch.UPPER)


@dataclass(frozen=True)
class ConvexWeights:
    """Weights ``(a_CL, a_HUU, a_KK, a_HMZ)`` of a convex combination."""

    a: Tuple[float, float, float, float]

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        if len(a) != 4:
            raise ContractViolation("convex combination needs exactly four weights")
        if any(not (0.0 <= v <= 1.0) for v in a):
            raise ContractViolation(f"weights must lie in [0, 1]: {a}")
        if abs(math.fsum(a) - 1.0) > WEIGHT_SUM_TOL:
            raise ContractViolation(f"weights must sum to 1: {a}")
        object.__setattr__(self, "a", a)

    @classmethod
    def unit(cls, family: str) -> "ConvexWeights":
        a = [0.0] * 4
        a[FAMILIES.index(family)] = 1.0
        return cls(tuple(a))


@dataclass(frozen=True)
class ScalingValue:
    d: np.ndarray
    branch_tags: np.ndarray


@dataclass(frozen=True)
class ScalingSpec:
    """Which scaling family to use and its parameters.

    ``alpha`` may be a positive constant or a callable ``alpha(x)``; the
    callable form exists for Barzilai-Borwein style choices and is not
    expressible in the string grammar.
    """

    family: str = "CL"
    p: float = 1.0
    gamma: float = 1.0
    alpha: Union[float, Callable[[np.ndarray], np.ndarray]] = 1.0
    weights: Optional[ConvexWeights] = None

    def __post_init__(self):
        family = self.family.upper()
        if family not in FAMILIES:
            raise ContractViolation(f"unknown scaling family {self.family!r}")
        object.__setattr__(self, "family", family)
        if family == "CON" and self.weights is None:
            raise ContractViolation("CON scaling needs weights")
        if family != "CON" and self.weights is not None:
            raise ContractViolation("weights are only meaningful for CON")
        if not self.p > 0:
            raise ContractViolation("HUU exponent must be positive")
        if not self.gamma > 0:
            raise ContractViolation("KK gamma must be positive")
        if not callable(self.alpha) and not self.alpha > 0:
            raise ContractViolation("HMZ alpha must be positive")

    def evaluate(self, x, g, box) -> ScalingValue:
        if self.family == "CL":
            return d_cl(x, g, box)
        if self.family == "HUU":
            return d_huu(x, g, box, self.p)
        if self.family == "KK":
            return d_kk(x, g, box, self.gamma)
        if self.family == "HMZ":
            return d_hmz(x, g, box, self.alpha)
        return d_con(x, g, box, self.weights, p=self.p, gamma=self.gamma, alpha=self.alpha)

    __call__ = evaluate

    @property
    def id(self) -> str:
        return format_scaling(self)

    @property
    def label(self) -> str:
        if self.family != "CON":
            return self.family
        parts = [
            f"{_fmt(w)} {name}"
            for w, name in zip(self.weights.a, FAMILIES[:4])
            if w > 0
        ]
        return " + ".join(parts)


def _bounds(box):
    if isinstance(box, BoxBounds):
        return box.lower, box.upper
    lower, upper = box
    return np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)


def zero_gradient_mask(g) -> np.ndarray:
    """``|g_i| <= 1e-14 * max(1, ||g||_inf)``, per point along the last axis."""
    g = np.asarray(g, dtype=float)
    scale = np.maximum(1.0, np.max(np.abs(g), axis=-1, keepdims=True))
    return np.abs(g) <= ZERO_GRADIENT_RTOL * scale


def _distances(x, lower, upper):
    with np.errstate(invalid="ignore"):
        to_lower = np.where(np.isfinite(lower), x - lower, np.inf)
        to_upper = np.where(np.isfinite(upper), upper - x, np.inf)
    return to_lower, to_upper


def d_cl(x, g, box) -> ScalingValue:
    """Coleman-Li scaling."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    lower, upper = _bounds(box)
    to_lower, to_upper = _distances(x, lower, upper)
    fl, fu = np.isfinite(lower), np.isfinite(upper)
    zero = zero_gradient_mask(g)

    upper_branch = (g < 0) & ~zero & fu
    lower_branch = (g > 0) & ~zero & fl
    min_branch = zero & (fl | fu)

    d = np.ones(np.broadcast_shapes(x.shape, g.shape, lower.shape))
    tags = np.full(d.shape, Branch.FREE, dtype=np.int8)
    d = np.where(upper_branch, to_upper, d)
    d = np.where(lower_branch, to_lower, d)
    d = np.where(min_branch, np.minimum(to_lower, to_upper), d)
    tags[np.broadcast_to(upper_branch, d.shape)] = Branch.UPPER
    tags[np.broadcast_to(lower_branch, d.shape)] = Branch.LOWER
    tags[np.broadcast_to(min_branch, d.shape)] = Branch.MIN_DISTANCE
    return ScalingValue(d, tags)


def d_huu(x, g, box, p: float = 1.0) -> ScalingValue:
    """Heinkenschloss-Ulbrich-Ulbrich scaling with exponent ``p``.

    Falls back to the Coleman-Li diagonal when ``|g_i| < m_i**p`` or
    ``m_i < |g_i|**p`` (``m_i`` the distance to the nearer finite bound),
    and to 1 otherwise.
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    lower, upper = _bounds(box)
    to_lower, to_upper = _distances(x, lower, upper)
    m = np.minimum(to_lower, to_upper)
    abs_g = np.abs(g)
    use_cl = (abs_g < m**p) | (m < abs_g**p)
    cl = d_cl(x, g, (lower, upper))
    d = np.where(use_cl, cl.d, 1.0)
    tags = np.where(use_cl, cl.branch_tags, Branch.FREE).astype(np.int8)
    return ScalingValue(d, tags)


def d_kk(x, g, box, gamma: float = 1.0) -> ScalingValue:
    """Kanzow-Klug scaling: ``min(x-l + gamma*max(0,-g), u-x + gamma*max(0,g))``."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    lower, upper = _bounds(box)
    to_lower, to_upper = _distances(x, lower, upper)
    free = ~np.isfinite(lower) & ~np.isfinite(upper)
    d = np.minimum(to_lower + gamma * np.maximum(0.0, -g), to_upper + gamma * np.maximum(0.0, g))
    d = np.where(free, 1.0, d)
    tags = np.where(free, Branch.FREE, Branch.MIN_DISTANCE).astype(np.int8)
    return ScalingValue(d, tags)


def d_hmz(x, g, box, alpha=1.0) -> ScalingValue:
    """Hager-Mair-Zhang scaling ``chi / (alpha * chi + |g|)``.

    ``chi`` is the distance to the bound the negative gradient points at,
    and 1 when the gradient vanishes or that bound is infinite.
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    lower, upper = _bounds(box)
    to_lower, to_upper = _distances(x, lower, upper)
    zero = zero_gradient_mask(g)
    upper_branch = (g < 0) & ~zero & np.isfinite(upper)
    lower_branch = (g > 0) & ~zero & np.isfinite(lower)

    chi = np.ones(np.broadcast_shapes(x.shape, g.shape, lower.shape))
    chi = np.where(upper_branch, to_upper, chi)
    chi = np.where(lower_branch, to_lower, chi)
    a = alpha(x) if callable(alpha) else alpha
    a = np.asarray(a, dtype=float)
    if 0 < a.ndim == x.ndim - 1:
        a = a[..., None]
    d = chi / (a * chi + np.abs(g))

    tags = np.full(chi.shape, Branch.FREE, dtype=np.int8)
    tags[np.broadcast_to(upper_branch, chi.shape)] = Branch.UPPER
    tags[np.broadcast_to(lower_branch, chi.shape)] = Branch.LOWER
    return ScalingValue(d, tags)


def d_con(x, g, box, weights: ConvexWeights, p=1.0, gamma=1.0, alpha=1.0) -> ScalingValue:
    """Convex combination ``a1 D_CL + a2 D_HUU + a3 D_KK + a4 D_HMZ``.

    Only components with positive weight are evaluated.  Branch tags come
    from the largest-weight component, ties resolved in CL, HUU, KK, HMZ
    order.
    """
    if not isinstance(weights, ConvexWeights):
        weights = ConvexWeights(tuple(weights))
    makers = (
        lambda: d_cl(x, g, box),
        lambda: d_huu(x, g, box, p),
        lambda: d_kk(x, g, box, gamma),
        lambda: d_hmz(x, g, box, alpha),
    )
    lead = int(np.argmax(weights.a))
    d = None
    tags = None
    for k, (a, make) in enumerate(zip(weights.a, makers)):
        if a <= 0.0:
            continue
        value = make()
        d = a * value.d if d is None else d + a * value.d
        if k == lead:
            tags = value.branch_tags
    return ScalingValue(d, tags)


def metric_G(d, floor: float = METRIC_FLOOR) -> np.ndarray:
    """Diagonal of the elliptical metric ``D^(-1/2)``, with ``d`` floored."""
    if isinstance(d, ScalingValue):
        d = d.d
    return np.maximum(np.asarray(d, dtype=float), floor) ** -0.5


def scaled_gradient(d, g) -> np.ndarray:
    """``-D g``."""
    if isinstance(d, ScalingValue):
        d = d.d
    d = np.asarray(d, dtype=float)
    g = np.asarray(g, dtype=float)
    if d.shape != g.shape:
        raise ContractViolation("scaling and gradient lengths differ")
    return -d * g


# ---------------------------------------------------------------------------
# string grammar:  cl | huu[:p] | kk[:gamma] | hmz[:alpha]
#                  | con:a1,a2,a3,a4[;p=..][;gamma=..][;alpha=..]


def _fmt(value: float) -> str:
    frac = Fraction(value).limit_denominator(64)
    if float(frac) == value:
        return str(frac)
    return repr(float(value))


def _num(text: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a number: {text!r}") from None


def parse_scaling(text: str) -> ScalingSpec:
    """Parse one scaling spec string, e.g. ``huu:2`` or ``con:1/2,0,1/2,0;gamma=2``."""
    raw = text.strip()
    name, _, rest = raw.partition(":")
    name = name.strip().lower()
    try:
        if name == "cl":
            if rest:
                raise ValueError("cl takes no parameter")
            return ScalingSpec("CL")
        if name == "huu":
            return ScalingSpec("HUU", p=_num(rest) if rest else 1.0)
        if name == "kk":
            return ScalingSpec("KK", gamma=_num(rest) if rest else 1.0)
        if name == "hmz":
            return ScalingSpec("HMZ", alpha=_num(rest) if rest else 1.0)
        if name == "con":
            head, *options = rest.split(";")
            weights = tuple(_num(w) for w in head.split(","))
            kwargs = {}
            for opt in options:
                key, eq, value = opt.partition("=")
                key = key.strip().lower()
                if not eq or key not in ("p", "gamma", "alpha") or key in kwargs:
                    raise ValueError(f"bad option {opt!r}")
                kwargs[key] = _num(value)
            return ScalingSpec("CON", weights=ConvexWeights(weights), **kwargs)
    except ContractViolation as exc:
        raise ValueError(f"invalid scaling {raw!r}: {exc}") from None
    raise ValueError(f"invalid scaling {raw!r}")


def format_scaling(spec: ScalingSpec) -> str:
    if callable(spec.alpha):
        raise ValueError("a callable alpha has no string form")
    if spec.family == "CL":
        return "cl"
    if spec.family == "HUU":
        return "huu" if spec.p == 1.0 else f"huu:{_fmt(spec.p)}"
    if spec.family == "KK":
        return "kk" if spec.gamma == 1.0 else f"kk:{_fmt(spec.gamma)}"
    if spec.family == "HMZ":
        return "hmz" if spec.alpha == 1.0 else f"hmz:{_fmt(spec.alpha)}"
    out = "con:" + ",".join(_fmt(a) for a in spec.weights.a)
    for key in ("p", "gamma", "alpha"):
        value = getattr(spec, key)
        if value != 1.0:
            out += f";{key}={_fmt(value)}"
    return out


def split_scaling_list(text: str) -> list:
    """Split a comma list of specs, keeping the four weights of ``con:`` together.

    The preset name ``paper7`` expands to the seven benchmark scalings.
    """
    tokens = [t.strip() for t in text.split(",") if t.strip()]
    specs = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.lower() == "paper7":
            specs.extend(paper7())
            i += 1
        elif tok.lower().startswith("con:"):
            specs.append(parse_scaling(",".join(tokens[i : i + 4])))
            i += 4
        else:
            specs.append(parse_scaling(tok))
            i += 1
    return specs


def paper7(p: float = 1.0, gamma: float = 1.0) -> list:
    """CL, KK, HUU and the four half/third combinations of them."""
    half, third = 0.5, 1.0 / 3.0
    return [
        ScalingSpec("CL"),
        ScalingSpec("KK", gamma=gamma),
        ScalingSpec("HUU", p=p),
        ScalingSpec("CON", weights=ConvexWeights((half, half, 0.0, 0.0)), p=p, gamma=gamma),
        ScalingSpec("CON", weights=ConvexWeights((half, 0.0, half, 0.0)), p=p, gamma=gamma),
        ScalingSpec("CON", weights=ConvexWeights((0.0, half, half, 0.0)), p=p, gamma=gamma),
        ScalingSpec("CON", weights=ConvexWeights((third, third, third, 0.0)), p=p, gamma=gamma),
    ]


# ---------------------------------------------------------------------------
# empirical certification of the scaling-matrix assumptions


@dataclass
class AssumptionReport:
    sign_condition_violations: int
    max_d_observed: float
    min_boundary_step_observed: float
    max_inverse_norm_observed: float
    samples: int
    seed: int
    n: int = 0
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.sign_condition_violations == 0


PROBE_OFFSET = 1e-7
NEAR_BOUND_DMAX = 1e-3


def _sample_interior(lower, upper, m, rng):
    n = lower.size
    fl, fu = np.isfinite(lower), np.isfinite(upper)
    u01 = rng.uniform(0.0, 1.0, size=(m, n))
    # open interval: keep away from exact endpoints
    u01 = np.clip(u01, 1e-9, 1 - 1e-9)
    z = rng.standard_normal(size=(m, n))
    lo = np.where(fl, lower, 0.0)
    hi = np.where(fu, upper, 0.0)
    X = np.where(fl & fu, lo + u01 * (hi - lo), z)
    X = np.where(fl & ~fu, lo + np.abs(z) + 1e-9, X)
    X = np.where(~fl & fu, hi - np.abs(z) - 1e-9, X)
    return X


def _gradients(problem: NlsProblem, X):
    with np.errstate(all="ignore"):
        if problem.vectorized and callable(problem.jacobian):
            F = np.asarray(problem.residual(X), dtype=float)
            J = np.asarray(problem.jacobian(X), dtype=float)
            return np.einsum("mij,mi->mj", J, F)
        out = np.empty_like(X)
        for k, x in enumerate(X):
            F = np.asarray(problem.residual(x), dtype=float)
            if callable(problem.jacobian):
                J = np.asarray(problem.jacobian(x), dtype=float)
            else:
                J = fd_jacobian(problem, x)
            out[k] = J.T @ F
        return out


def _as_value(result):
    if isinstance(result, ScalingValue):
        return result.d
    return np.asarray(result, dtype=float)


def check_assumptions(spec, problem: NlsProblem, samples: int = 10_000, seed: int = 0) -> AssumptionReport:
    """Sample the box and test the scaling conditions numerically.

    ``spec`` is a :class:`ScalingSpec` or any callable ``(x, g, box)``
    returning a :class:`ScalingValue` or a diagonal array.  Each
    ``(sample, coordinate)`` pair counts at most once as a violation.

    Checks per sample ``x`` (and a probe point that pushes a random subset
    of coordinates to within ``1e-7 * width`` of a finite bound):

    * ``d_i >= 0``, and ``d_i > 0`` wherever ``g_i != 0``;
    * at a probed coordinate whose gradient points out of the box through
      the nearby bound, ``d_i <= 1e-3 * width``.

    Witnesses: the largest ``d_i`` seen, the smallest step to the boundary
    along ``-D g``, and the largest ``max_i 1/d_i`` over the samples and a
    point drawn in the ball of radius ``rho/2`` around each sample.
    """
    if samples < 1:
        raise ContractViolation("need at least one sample")
    evaluate = spec.evaluate if isinstance(spec, ScalingSpec) else spec
    box = problem.box
    lower, upper = box.lower, box.upper
    fl, fu = box.finite_lower, box.finite_upper
    n = box.n
    width = box.widths()
    rng = np.random.default_rng(seed)

    X = _sample_interior(lower, upper, samples, rng)
    G = _gradients(problem, X)
    D = _as_value(evaluate(X, G, box))

    zero = zero_gradient_mask(G)
    bad = (D < 0) | ((D == 0) & ~zero) | ~np.isfinite(D)

    # probe points near the boundary
    push = rng.uniform(size=(samples, n)) < 0.5
    side_upper = rng.uniform(size=(samples, n)) < 0.5
    side_upper = np.where(fl & fu, side_upper, fu)  # only sides that exist
    push &= np.where(side_upper, fu, fl)
    offset = PROBE_OFFSET * width
    P = X.copy()
    near_lower = push & ~side_upper
    near_upper = push & side_upper
    lo = np.where(fl, lower, 0.0)
    hi = np.where(fu, upper, 0.0)
    P = np.where(near_lower, lo + offset, P)
    P = np.where(near_upper, hi - offset, P)
    GP = _gradients(problem, P)
    DP = _as_value(evaluate(P, GP, box))
    zeroP = zero_gradient_mask(GP)
    bad |= (DP < 0) | ((DP == 0) & ~zeroP) | ~np.isfinite(DP)
    outward = (near_lower & (GP > 0) & ~zeroP) | (near_upper & (GP < 0) & ~zeroP)
    bad |= outward & (DP > NEAR_BOUND_DMAX * width)

    # step to the boundary along the scaled gradient
    direction = -D * G
    steps = np.full(X.shape, np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        up = (direction > 0) & fu
        down = (direction < 0) & fl
        steps = np.where(up, (hi - X) / direction, steps)
        steps = np.where(down, (lo - X) / direction, steps)
    lam = steps.min(axis=1)
    lam = lam[lam > 0]
    min_step = float(lam.min()) if lam.size else math.inf

    # ||D^-1|| over a ball of radius rho/2 around each sample
    to_lower, to_upper = _distances(X, lower, upper)
    rho = np.minimum(to_lower, to_upper).min(axis=1)
    rho = np.where(np.isfinite(rho), rho, 1.0)
    direction = rng.standard_normal(size=X.shape)
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = 0.5 * rho * rng.uniform(size=samples)
    B = X + direction * radius[:, None]
    DB = _as_value(evaluate(B, _gradients(problem, B), box))
    with np.errstate(divide="ignore"):
        inv = np.concatenate([1.0 / D, 1.0 / DB]).max(axis=1)
    max_inv = float(inv.max()) if np.all(np.isfinite(inv)) else math.inf

    finite_d = np.concatenate([D, DP])
    return AssumptionReport(
        sign_condition_violations=int(bad.sum()),
        max_d_observed=float(np.max(finite_d)),
        min_boundary_step_observed=min_step,
        max_inverse_norm_observed=max_inv,
        samples=samples,
        seed=seed,
        n=n,
    )
