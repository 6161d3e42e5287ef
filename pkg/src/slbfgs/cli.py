"""Command-line interface: single runs, sweeps and performance profiles."""

import argparse
import logging
import sys
from collections.abc import Sequence

from slbfgs.analysis import newton_diagnostics, with_newton_columns
from slbfgs.bench import METRICS, profile_from_directory, run_suite, write_profile_csv, write_trace_csv
from slbfgs.config import SweepSpec, line_search_config, load_sweep_spec, parse_memory
from slbfgs.linesearch import LineSearchKind
from slbfgs.memory import InnerSolverConfig
from slbfgs.optimizer import OptimizeResult, OptimizerConfig, Problem, StoppingRule, Strategy, minimize
from slbfgs.problems import DEFAULT_GRID, make_nonconvex, make_quadratic

logger = logging.getLogger("slbfgs")


def _add_run_arguments(parser: argparse.ArgumentParser, exact_default: bool, grad_tol: float, max_iter: int) -> None:
    parser.add_argument("--m", type=int, default=DEFAULT_GRID, help="grid size, n = m^2")
    parser.add_argument("--memory", type=parse_memory, default=5, help="memory length or 'inf'")
    parser.add_argument(
        "--strategy", choices=[s.value for s in Strategy], default=Strategy.BS.value, help="seed scaling strategy"
    )
    parser.add_argument(
        "--line-search", choices=[k.value for k in LineSearchKind], default=LineSearchKind.ARMIJO.value
    )
    parser.add_argument("--grad-tol", type=float, default=grad_tol, help="stop when |grad J| <= grad-tol")
    parser.add_argument("--max-iter", type=int, default=max_iter)
    parser.add_argument("--inner-maxiter", type=int, default=50, help="MINRES iteration cap")
    parser.add_argument("--inner-tol", type=float, default=1e-2, help="MINRES relative residual tolerance")
    parser.add_argument(
        "--exact-seed-solve",
        action=argparse.BooleanOptionalAction,
        default=exact_default,
        help="solve seed systems with a dense direct solver instead of MINRES",
    )
    parser.add_argument("--newton-diagnostics", action="store_true", help="fill the Newton columns of the trace")
    parser.add_argument("--csv-out", help="write the iteration trace to this CSV file")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with the quadratic, nonconvex, sweep and profile subcommands."""
    parser = argparse.ArgumentParser(prog="slbfgs", description="Structured L-BFGS experiments")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="only report warnings and errors")
    sub = parser.add_subparsers(dest="command", required=True)

    quad = sub.add_parser("quadratic", help="run one strategy on the structured quadratic")
    quad.add_argument("--alpha", type=float, default=1e-1, help="regularization weight")
    _add_run_arguments(quad, exact_default=True, grad_tol=1e-13, max_iter=10000)

    nonconvex = sub.add_parser("nonconvex", help="run one strategy on the non-convex test problem")
    nonconvex.add_argument("--alpha", type=float, default=1e-2, help="regularization weight")
    nonconvex.add_argument("--rng-seed", type=int, default=0, help="seed for the coupling term and x0")
    nonconvex.add_argument("--fair-stopping", action="store_true", help="also stop on the FAIR-style triple")
    _add_run_arguments(nonconvex, exact_default=False, grad_tol=1e-8, max_iter=2000)

    sweep = sub.add_parser("sweep", help="run a strategy x memory x alpha sweep on the quadratic")
    sweep.add_argument("--spec-file", help="key=value sweep file (default: the full quadratic table)")
    sweep.add_argument("--out-dir", required=True, help="directory for summary, traces and profiles")

    profile = sub.add_parser("profile", help="performance profile of a finished sweep")
    profile.add_argument("--metric", choices=METRICS, default="iters")
    profile.add_argument("--in-dir", required=True, help="output directory of a sweep")
    profile.add_argument("--csv-out", required=True)
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    if args.quiet:
        level = logging.WARNING
    elif args.verbose >= 2:
        level = logging.DEBUG
    elif args.verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _optimizer_config(args: argparse.Namespace, fair: bool = False) -> OptimizerConfig:
    inner = None if args.exact_seed_solve else InnerSolverConfig(args.inner_maxiter, args.inner_tol)
    return OptimizerConfig(
        memory=args.memory,
        seed_strategy=Strategy(args.strategy),
        line_search=line_search_config(LineSearchKind(args.line_search)),
        inner=inner,
        stopping=StoppingRule(args.grad_tol, fair_triple=fair),
        max_iter=args.max_iter,
        keep_iterates=args.newton_diagnostics,
    )


def format_summary(result: OptimizeResult) -> str:
    """One-line summary of a run."""
    final = result.trace[-1]
    return (
        f"status={result.status.value} iterations={result.iterations} J={final.J:.6e} "
        f"grad_norm={final.grad_norm:.3e} mean_ls={result.mean_line_searches:.2f} "
        f"fallbacks={result.fallback_count}"
    )


def _run_single(problem: Problem, args: argparse.Namespace, cfg: OptimizerConfig) -> int:
    assert problem.x0 is not None
    result = minimize(problem, problem.x0, cfg)
    print(format_summary(result))
    if args.csv_out:
        trace = result.trace
        if args.newton_diagnostics:
            trace = with_newton_columns(trace, newton_diagnostics(problem, trace))
        write_trace_csv(trace, args.csv_out)
        logger.info("Wrote %s", args.csv_out)
    return 0 if result.status.converged else 1


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "quadratic":
        return _run_single(make_quadratic(args.m, args.alpha), args, _optimizer_config(args))
    if args.command == "nonconvex":
        problem = make_nonconvex(args.m, args.alpha, seed=args.rng_seed)
        return _run_single(problem, args, _optimizer_config(args, fair=args.fair_stopping))
    if args.command == "sweep":
        spec = load_sweep_spec(args.spec_file) if args.spec_file else SweepSpec()
        return run_suite(spec, args.out_dir)
    if args.command == "profile":
        table = profile_from_directory(args.in_dir, args.metric)
        if table is None:
            logger.error("No converged runs in %s", args.in_dir)
            return 1
        write_profile_csv(table, args.csv_out)
        return 0
    raise ValueError(f"Unknown command {args.command!r}")


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point of the ``slbfgs`` command.

    Returns:
        0 on success, 1 on invalid input, I/O failure or a run that did not
        converge; argparse exits with 2 on usage errors
    """
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    try:
        return _dispatch(args)
    except (ValueError, OSError) as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
