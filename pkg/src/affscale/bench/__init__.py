"""Benchmark sweeps, performance profiles and their CSV/SVG output."""

from .harness import RunRecord, aggregate_mean_over_starts, read_records, run_matrix, write_records
from .output import emit_csv, emit_svg, write_curves
from .profiles import ProfileCurve, nested_perf_profile, perf_profile

__all__ = [
    "ProfileCurve",
    "RunRecord",
    "aggregate_mean_over_starts",
    "emit_csv",
    "emit_svg",
    "nested_perf_profile",
    "perf_profile",
    "read_records",
    "run_matrix",
    "write_curves",
    "write_records",
]
