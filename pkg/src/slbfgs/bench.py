"""Benchmark harness: trace CSVs, sweeps over the quadratic family and profiles."""

import csv
import logging
import math
import time
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np

from slbfgs.analysis import ProfileTable, newton_diagnostics, performance_profile, with_newton_columns
from slbfgs.config import RunSpec, SweepSpec, format_memory
from slbfgs.optimizer import IterationRecord, OptimizeResult, Problem, minimize
from slbfgs.problems import make_quadratic
from slbfgs.utils import format_float, parse_float

logger = logging.getLogger(__name__)

TRACE_HEADER = (
    "k",
    "J",
    "grad_norm",
    "alpha",
    "tau",
    "n_ls",
    "pair_accepted",
    "rho_sign",
    "inner_iters",
    "inner_rel_res",
    "fallback",
    "cos_newton",
    "ratio_newton",
)
SUMMARY_HEADER = (
    "strategy",
    "memory",
    "alpha",
    "status",
    "iterations",
    "mean_line_searches",
    "n_fevals",
    "n_gevals",
    "final_J",
    "final_grad_norm",
    "fallbacks",
)
TIMINGS_HEADER = ("strategy", "memory", "alpha", "wall_time")
METRICS = ("iters", "fevals", "time")


def _format_int(value: int | None) -> str:
    return "" if value is None else str(value)


def _parse_int(text: str) -> int | None:
    return int(text) if text else None


def _format_flag(value: bool | None) -> str:
    return "" if value is None else str(int(value))


def _parse_flag(text: str) -> bool | None:
    return None if not text else text == "1"


@dataclass(frozen=True)
class TraceRow:
    """One line of a trace CSV."""

    k: int
    J: float  # noqa: N815
    grad_norm: float
    alpha: float | None
    tau: float | None
    n_ls: int | None
    pair_accepted: bool | None
    rho_sign: int | None
    inner_iters: int | None
    inner_rel_res: float | None
    fallback: bool | None
    cos_newton: float | None
    ratio_newton: float | None

    @classmethod
    def from_record(cls, record: IterationRecord) -> "TraceRow":
        """Project a record onto the CSV columns."""
        stats = record.inner_stats
        return cls(
            k=record.k,
            J=record.J,
            grad_norm=record.grad_norm,
            alpha=record.alpha,
            tau=record.tau,
            n_ls=record.n_line_search,
            pair_accepted=record.pair_accepted,
            rho_sign=record.rho_sign,
            inner_iters=stats.iterations if stats else None,
            inner_rel_res=stats.relative_residual if stats else None,
            fallback=record.fallback_used,
            cos_newton=record.cos_newton,
            ratio_newton=record.ratio_newton,
        )

    def to_strings(self) -> list[str]:
        """Cells in header order; None becomes an empty cell."""
        return [
            str(self.k),
            format_float(self.J),
            format_float(self.grad_norm),
            format_float(self.alpha),
            format_float(self.tau),
            _format_int(self.n_ls),
            _format_flag(self.pair_accepted),
            _format_int(self.rho_sign),
            _format_int(self.inner_iters),
            format_float(self.inner_rel_res),
            _format_flag(self.fallback),
            format_float(self.cos_newton),
            format_float(self.ratio_newton),
        ]

    @classmethod
    def from_strings(cls, cells: Sequence[str]) -> "TraceRow":
        """Parse cells written by :meth:`to_strings`."""
        if len(cells) != len(TRACE_HEADER):
            raise ValueError(f"Expected {len(TRACE_HEADER)} cells, got {len(cells)}")
        j, grad_norm = parse_float(cells[1]), parse_float(cells[2])
        if j is None or grad_norm is None:
            raise ValueError(f"Trace row {cells[0]} is missing J or grad_norm")
        return cls(
            k=int(cells[0]),
            J=j,
            grad_norm=grad_norm,
            alpha=parse_float(cells[3]),
            tau=parse_float(cells[4]),
            n_ls=_parse_int(cells[5]),
            pair_accepted=_parse_flag(cells[6]),
            rho_sign=_parse_int(cells[7]),
            inner_iters=_parse_int(cells[8]),
            inner_rel_res=parse_float(cells[9]),
            fallback=_parse_flag(cells[10]),
            cos_newton=parse_float(cells[11]),
            ratio_newton=parse_float(cells[12]),
        )


def write_trace(trace: Iterable[IterationRecord], stream: TextIO) -> None:
    """Write a trace as CSV to an open text stream."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for record in trace:
        writer.writerow(TraceRow.from_record(record).to_strings())


def write_trace_csv(trace: Iterable[IterationRecord], path: str | Path) -> None:
    """Write a trace CSV file."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        write_trace(trace, f)


def read_trace_csv(path: str | Path) -> list[TraceRow]:
    """Read a trace CSV file."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_HEADER:
            raise ValueError(f"{path} does not start with the trace header")
        return [TraceRow.from_strings(row) for row in reader]


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


@dataclass(frozen=True, eq=False)
class RunOutcome:
    """Result of one sweep cell."""

    run: RunSpec
    result: OptimizeResult
    trace: tuple[IterationRecord, ...]
    wall_time: float

    def metric(self, name: str) -> float:
        """Profile metric; failed runs count as +inf."""
        if not self.result.status.converged:
            return math.inf
        if name == "iters":
            return float(max(self.result.iterations, 1))
        if name == "fevals":
            return float(self.result.n_fevals)
        if name == "time":
            return self.wall_time
        raise ValueError(f"Unknown metric {name!r}, expected one of {METRICS}")

    def summary_row(self) -> list[str]:
        """Cells of summary.csv."""
        final = self.trace[-1]
        return [
            self.run.strategy.value,
            format_memory(self.run.memory),
            format_float(self.run.alpha),
            self.result.status.value,
            str(self.result.iterations),
            format_float(self.result.mean_line_searches),
            str(self.result.n_fevals),
            str(self.result.n_gevals),
            format_float(final.J),
            format_float(final.grad_norm),
            str(self.result.fallback_count),
        ]


def run_problem(problem: Problem, spec: SweepSpec, run: RunSpec) -> RunOutcome:
    """Run one sweep cell on a given problem."""
    if problem.x0 is None:
        raise ValueError(f"Problem {problem.name} has no default start point")
    cfg = spec.optimizer_config(run)
    logger.info("Starting %s on %s", run.label, problem.name)
    start = time.perf_counter()
    result = minimize(problem, problem.x0, cfg)
    wall_time = time.perf_counter() - start
    trace = result.trace
    if spec.newton_diagnostics and problem.dense_hessian is not None:
        trace = with_newton_columns(trace, newton_diagnostics(problem, trace))
    if result.fallback_count:
        logger.warning("%s used the diagonal fallback %d times", run.label, result.fallback_count)
    return RunOutcome(run, result, trace, wall_time)


def run_sweep(spec: SweepSpec) -> list[RunOutcome]:
    """Run every cell of a sweep, in sweep order."""
    problems = {alpha: make_quadratic(spec.m, alpha) for alpha in spec.alphas}
    runs = list(spec.runs())
    if spec.workers == 1:
        return [run_problem(problems[run.alpha], spec, run) for run in runs]
    with ThreadPoolExecutor(max_workers=spec.workers) as pool:
        return list(pool.map(lambda run: run_problem(problems[run.alpha], spec, run), runs))


def profile_from_outcomes(outcomes: Sequence[RunOutcome], metric: str) -> ProfileTable | None:
    """Profile of strategies over the (memory, alpha) instances of a sweep.

    Instances on which every strategy failed are dropped; returns None when
    nothing is left.
    """
    methods = list(dict.fromkeys(o.run.strategy.value for o in outcomes))
    problems = list(dict.fromkeys(o.run.problem_label for o in outcomes))
    table = np.full((len(problems), len(methods)), math.inf)
    for outcome in outcomes:
        row = problems.index(outcome.run.problem_label)
        table[row, methods.index(outcome.run.strategy.value)] = outcome.metric(metric)
    return _profile_or_none(table, methods, problems, metric)


def _profile_or_none(
    table: np.ndarray, methods: Sequence[str], problems: Sequence[str], metric: str
) -> ProfileTable | None:
    solved = np.isfinite(table).any(axis=1)
    if not solved.all():
        dropped = [p for p, ok in zip(problems, solved, strict=True) if not ok]
        logger.warning("No method solved %s; dropped from the %s profile", dropped, metric)
    if not solved.any():
        return None
    kept = [p for p, ok in zip(problems, solved, strict=True) if ok]
    return performance_profile(table[solved], methods, kept)


def write_profile_csv(table: ProfileTable, path: str | Path) -> None:
    """Write rho_s(tau) with one column per method."""
    rows = (
        [format_float(tau), *(format_float(value) for value in curve)]
        for tau, curve in zip(table.taus, table.curves, strict=True)
    )
    _write_rows(Path(path), ("tau", *table.methods), rows)


def run_suite(spec: SweepSpec, out_dir: str | Path) -> int:
    """Run a sweep and write its CSV outputs.

    Writes ``summary.csv``, ``timings.csv``, ``traces/<run>.csv`` and
    ``profile_<metric>.csv`` under ``out_dir``. An empty sweep writes nothing.

    Args:
        spec: Sweep to run
        out_dir: Output directory, created if missing

    Returns:
        0 when every run converged, 1 otherwise
    """
    if spec.is_empty:
        logger.info("Empty sweep, nothing to do")
        return 0
    out = Path(out_dir)
    traces_dir = out / "traces"
    traces_dir.mkdir(parents=True, exist_ok=True)

    outcomes = run_sweep(spec)
    for outcome in outcomes:
        write_trace_csv(outcome.trace, traces_dir / f"{outcome.run.label}.csv")
    _write_rows(out / "summary.csv", SUMMARY_HEADER, (o.summary_row() for o in outcomes))
    _write_rows(
        out / "timings.csv",
        TIMINGS_HEADER,
        (
            [o.run.strategy.value, format_memory(o.run.memory), format_float(o.run.alpha), format_float(o.wall_time)]
            for o in outcomes
        ),
    )
    for metric in METRICS:
        profile = profile_from_outcomes(outcomes, metric)
        if profile is not None:
            write_profile_csv(profile, out / f"profile_{metric}.csv")

    failed = [o.run.label for o in outcomes if not o.result.status.converged]
    if failed:
        logger.warning("%d of %d runs did not converge: %s", len(failed), len(outcomes), ", ".join(failed))
        return 1
    logger.info("All %d runs converged", len(outcomes))
    return 0


def profile_from_directory(in_dir: str | Path, metric: str) -> ProfileTable | None:
    """Rebuild a profile from the summary.csv (and timings.csv) of a sweep."""
    if metric not in METRICS:
        raise ValueError(f"Unknown metric {metric!r}, expected one of {METRICS}")
    base = Path(in_dir)
    with open(base / "summary.csv", newline="", encoding="utf-8") as f:
        summary = list(csv.DictReader(f))
    wall_times: dict[tuple[str, str, str], float] = {}
    if metric == "time":
        with open(base / "timings.csv", newline="", encoding="utf-8") as f:
            for row in csv.DictReader(f):
                wall_times[(row["strategy"], row["memory"], row["alpha"])] = float(row["wall_time"])

    methods = list(dict.fromkeys(row["strategy"] for row in summary))
    problems = list(dict.fromkeys(f"l{row['memory']}_a{float(row['alpha']):g}" for row in summary))
    table = np.full((len(problems), len(methods)), math.inf)
    for row in summary:
        if not row["status"].startswith("converged"):
            continue
        if metric == "iters":
            value = float(max(int(row["iterations"]), 1))
        elif metric == "fevals":
            value = float(row["n_fevals"])
        else:
            value = wall_times[(row["strategy"], row["memory"], row["alpha"])]
        problem = f"l{row['memory']}_a{float(row['alpha']):g}"
        table[problems.index(problem), methods.index(row["strategy"])] = value
    return _profile_or_none(table, methods, problems, metric)
