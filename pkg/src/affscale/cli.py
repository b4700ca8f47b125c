"""Command-line front end.

Exit codes: 0 ok, 1 solver did not converge (solve/minimize), 2 usage
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

import numpy as np

from . import ip_newton, problems
from .bench import (
    aggregate_mean_over_starts,
    emit_svg,
    nested_perf_profile,
    perf_profile,
    read_records,
    run_matrix,
    write_curves,
    write_records,
)
from .dogleg import TrustRegionConfig, solve
from .scaling import check_assumptions, parse_scaling, split_scaling_list

EXIT_OK, EXIT_NONCONVERGED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _scaling(text: str):
    try:
        return parse_scaling(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _nls_problem(pb: int):
    try:
        return problems.get_problem(pb)
    except (KeyError, problems.NotTranscribedError) as exc:
        raise UsageError(str(exc.args[0])) from None


def _problem_list(text: str) -> List[int]:
    if text.strip().lower() == "all":
        return problems.runnable_problems()
    try:
        pbs = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad problem list {text!r}") from None
    for pb in pbs:
        _nls_problem(pb)
    return pbs


def cmd_list_problems(args) -> int:
    print("pb,name,dim,box_lo,box_hi,status")
    for entry in problems.REGISTRY.values():
        print(entry.csv_line())
    return EXIT_OK


def cmd_solve(args) -> int:
    problem = _nls_problem(args.problem)
    spec = _scaling(args.scaling)
    try:
        config = TrustRegionConfig(
            delta0=args.delta0, max_iter=args.max_iter, max_fevals=args.max_fevals, tol_residual=args.tol
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    x0 = problems.starting_point(problem, args.start)
    if args.trace:
        with open(args.trace, "w") as fh:
            outcome = solve(problem, spec, x0, config, trace_stream=fh)
    else:
        outcome = solve(problem, spec, x0, config)
    print(
        json.dumps(
            {
                "pb": args.problem,
                "start": args.start,
                "scaling": spec.id,
                "status": outcome.status.value,
                "it": outcome.iterations,
                "fe": outcome.fevals,
                "final_residual": outcome.final_residual_norm,
            }
        )
    )
    return EXIT_OK if outcome.converged else EXIT_NONCONVERGED


def cmd_minimize(args) -> int:
    problem = problems.MIN_PROBLEMS[args.problem]()
    spec = _scaling(args.scaling)
    config = ip_newton.IpConfig(max_iter=args.max_iter)
    outcome = ip_newton.minimize(problem, spec, config=config)
    print(
        json.dumps(
            {
                "problem": args.problem,
                "scaling": spec.id,
                "converged": outcome.converged,
                "iterations": outcome.iterations,
                "iterations_to_1e-12": outcome.iterations_to(1e-12),
                "final_distance": outcome.distance_history[-1],
                "final_point": np.asarray(outcome.final_point).tolist(),
            }
        )
    )
    return EXIT_OK if outcome.converged else EXIT_NONCONVERGED


def cmd_bench(args) -> int:
    pbs = _problem_list(args.problems)
    try:
        specs = split_scaling_list(args.scalings)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not specs:
        raise UsageError("no scalings given")
    starts = [int(s) for s in args.starts.split(",")]
    if any(s not in (1, 2, 3) for s in starts):
        raise UsageError("starts must be drawn from 1,2,3")
    records = run_matrix(pbs, starts, specs, jobs=args.jobs, seed=args.seed, timing=args.timing)
    if args.aggregate == "mean-over-starts":
        records = aggregate_mean_over_starts(records)
    write_records(records, args.out)
    solved = sum(r.converged for r in records)
    print(f"{len(records)} records ({solved} converged) written to {args.out}")
    return EXIT_OK


def cmd_profile(args) -> int:
    try:
        records = read_records(args.input)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    build = nested_perf_profile if args.nested else perf_profile
    try:
        curves = build(records, args.metric, failures=args.failures)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_curves(curves, args.out)
    if args.svg:
        kind = "nested performance profile" if args.nested else "performance profile"
        emit_svg(curves, args.svg, title=f"{kind} ({args.metric})")
    print(f"{len(curves)} curves written to {args.out}")
    return EXIT_OK


def cmd_check_scaling(args) -> int:
    problem = _nls_problem(args.problem)
    spec = _scaling(args.scaling)
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    report = check_assumptions(spec, problem, samples=args.samples, seed=args.seed)
    print(
        json.dumps(
            {
                "scaling": spec.id,
                "pb": args.problem,
                "samples": report.samples,
                "seed": report.seed,
                "sign_condition_violations": report.sign_condition_violations,
                "max_d_observed": report.max_d_observed,
                "min_boundary_step_observed": report.min_boundary_step_observed,
                "max_inverse_norm_observed": report.max_inverse_norm_observed,
                "notes": report.notes,
            }
        )
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="affscale", description="Affine-scaling trust-region solvers and benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list-problems", help="print the problem registry")
    p.set_defaults(func=cmd_list_problems)

    p = sub.add_parser("solve", help="solve one problem with the constrained dogleg method")
    p.add_argument("--problem", type=int, required=True)
    p.add_argument("--start", type=int, choices=(1, 2, 3), default=1)
    p.add_argument("--scaling", required=True)
    p.add_argument("--max-iter", type=int, default=300)
    p.add_argument("--max-fevals", type=int, default=1000)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--delta0", type=float, default=1.0)
    p.add_argument("--trace", help="write one JSON line per trial step to this file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("minimize", help="run the interior-point Newton method on a bound-constrained test function")
    p.add_argument("--problem", choices=sorted(problems.MIN_PROBLEMS), required=True)
    p.add_argument("--scaling", required=True)
    p.add_argument("--max-iter", type=int, default=100)
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("bench", help="run a problem x start x scaling sweep")
    p.add_argument("--problems", required=True, help="comma list of problem numbers, or 'all'")
    p.add_argument("--scalings", required=True, help="comma list of scaling specs; 'paper7' expands to the seven presets")
    p.add_argument("--starts", default="1,2,3")
    p.add_argument("--aggregate", choices=("none", "mean-over-starts"), default="none")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timing", action="store_true", help="record wall times (output is then not reproducible)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("profile", help="performance profiles from a records file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--metric", choices=("it", "fe"), required=True)
    p.add_argument("--nested", action="store_true")
    p.add_argument("--failures", choices=("inf", "exclude"), default="inf")
    p.add_argument("--out", required=True)
    p.add_argument("--svg")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("check-scaling", help="sample-based check of the scaling-matrix conditions")
    p.add_argument("--scaling", required=True)
    p.add_argument("--problem", type=int, required=True)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check_scaling)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
