"""Affine-scaling trust-region and interior-point solvers for box-constrained problems."""

from .core import BoxBounds, ContractViolation, EvaluationError, NlsProblem
from .dogleg import SolveOutcome, Status, TrustRegionConfig, solve
from .scaling import ConvexWeights, ScalingSpec, ScalingValue, parse_scaling

__version__ = "0.1.0"

__all__ = [
    "BoxBounds",
    "ContractViolation",
    "ConvexWeights",
    "EvaluationError",
    "NlsProblem",
    "ScalingSpec",
    "ScalingValue",
    "SolveOutcome",
    "Status",
    "TrustRegionConfig",
    "parse_scaling",
    "solve",
]
