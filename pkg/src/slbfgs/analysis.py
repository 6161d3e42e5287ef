"""Post-hoc analysis of optimizer runs.

Dolan–Moré performance profiles across methods, comparison of search
directions with the Newton direction, and empirical linear-rate estimates.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from slbfgs.optimizer import IterationRecord, Problem
from slbfgs.utils import FloatArray

# J - J* below this is treated as converged to machine precision
RATE_FLOOR = 1e-24
MIN_TAIL = 10


@dataclass(frozen=True, eq=False)
class ProfileTable:
    """Performance profile rho_s(tau) of each method.

    ``curves[i, s]`` is the fraction of problems on which method s is within a
    factor ``taus[i]`` of the best method.
    """

    methods: tuple[str, ...]
    problems: tuple[str, ...]
    ratios: FloatArray = field(repr=False)
    taus: FloatArray = field(repr=False)
    curves: FloatArray = field(repr=False)

    def rho(self, method: str, tau: float) -> float:
        """Fraction of problems with ratio r_{p,s} <= tau for one method."""
        column = self.ratios[:, self.methods.index(method)]
        return float(np.mean(column <= tau))


def performance_profile(
    times: FloatArray | Sequence[Sequence[float]],
    methods: Sequence[str] | None = None,
    problems: Sequence[str] | None = None,
    taus: Sequence[float] | None = None,
) -> ProfileTable:
    """Compute the Dolan–Moré profile of a metric table.

    Args:
        times: n_p × n_s metric values t_{p,s} > 0; failures are +inf
        methods: Method names (default "m0", "m1", ...)
        problems: Problem names (default "p0", "p1", ...)
        taus: Sample grid (default 1 and every finite ratio)

    Returns:
        ProfileTable
    """
    table = np.asarray(times, dtype=np.float64)
    if table.ndim != 2 or table.size == 0:
        raise ValueError(f"Expected a nonempty n_p x n_s table, got shape {table.shape}")
    if np.any(np.isnan(table)) or np.any(table <= 0.0):
        raise ValueError("Metric values must be positive (failures encoded as inf)")
    n_p, n_s = table.shape
    best = table.min(axis=1)
    failed_rows = np.flatnonzero(np.isinf(best))
    if failed_rows.size:
        raise ValueError(f"Every method failed on problem row(s) {failed_rows.tolist()}")
    methods = tuple(methods) if methods is not None else tuple(f"m{s}" for s in range(n_s))
    problems = tuple(problems) if problems is not None else tuple(f"p{p}" for p in range(n_p))
    if len(methods) != n_s or len(problems) != n_p:
        raise ValueError("Names do not match the table shape")

    ratios = table / best[:, None]
    if taus is None:
        finite = ratios[np.isfinite(ratios)]
        grid = np.unique(np.concatenate(([1.0], finite)))
    else:
        grid = np.asarray(sorted(taus), dtype=np.float64)
        if grid.size and grid[0] < 1.0:
            raise ValueError(f"Profile grid must start at tau >= 1, got {grid[0]}")
    curves = (ratios[None, :, :] <= grid[:, None, None]).mean(axis=1)
    return ProfileTable(methods, problems, ratios, grid, curves)


@dataclass(frozen=True)
class NewtonDiagnostics:
    """Angle and length of d_k relative to the Newton direction."""

    ks: tuple[int, ...]
    cosines: tuple[float, ...]
    ratios: tuple[float, ...]

    @property
    def median_cosine(self) -> float:
        """Median of the cosines, nan when empty."""
        return float(np.median(self.cosines)) if self.cosines else math.nan


def newton_diagnostics(problem: Problem, trace: Sequence[IterationRecord]) -> NewtonDiagnostics:
    """Compare each direction d_k with d_N = -∇²J(x_k)⁻¹∇J(x_k).

    Args:
        problem: Problem with ``dense_hessian``
        trace: Records carrying ``x`` and ``d`` (run with keep_iterates)

    Returns:
        NewtonDiagnostics for every record with a direction
    """
    if problem.dense_hessian is None:
        raise ValueError(f"Problem {problem.name} has no dense Hessian")
    ks: list[int] = []
    cosines: list[float] = []
    ratios: list[float] = []
    for record in trace:
        if record.d is None:
            continue
        if record.x is None:
            raise ValueError(f"Record {record.k} has a direction but no iterate")
        hessian = problem.dense_hessian(record.x)
        try:
            d_newton = np.linalg.solve(hessian, -np.asarray(problem.gradient(record.x)))
        except np.linalg.LinAlgError as exc:
            raise ValueError(f"Hessian at iterate {record.k} is singular") from exc
        d_norm = float(np.linalg.norm(record.d))
        newton_norm = float(np.linalg.norm(d_newton))
        if newton_norm == 0.0 or d_norm == 0.0:
            continue
        cosine = float(np.dot(record.d, d_newton)) / (d_norm * newton_norm)
        ks.append(record.k)
        cosines.append(max(-1.0, min(1.0, cosine)))
        ratios.append(d_norm / newton_norm)
    return NewtonDiagnostics(tuple(ks), tuple(cosines), tuple(ratios))


def with_newton_columns(
    trace: Sequence[IterationRecord], diagnostics: NewtonDiagnostics
) -> tuple[IterationRecord, ...]:
    """Copy of ``trace`` with cos_newton and ratio_newton filled in."""
    by_k = dict(zip(diagnostics.ks, zip(diagnostics.cosines, diagnostics.ratios, strict=True), strict=True))
    out = []
    for record in trace:
        if record.k in by_k and not record.partial:
            cosine, ratio = by_k[record.k]
            record = replace(record, cos_newton=cosine, ratio_newton=ratio)
        out.append(record)
    return tuple(out)


@dataclass(frozen=True)
class RateEstimate:
    """Empirical linear convergence factors over the tail of a trace."""

    q_factor: float
    r_factor_grad: float
    r_factor_x: float | None
    tail_length: int


def _r_factor(ks: FloatArray, values: FloatArray) -> float:
    slope = np.polyfit(ks, np.log(values), 1)[0]
    return float(np.exp(slope))


def estimate_rate(
    trace: Sequence[IterationRecord],
    j_star: float,
    x_star: FloatArray | None = None,
    tail_fraction: float = 0.5,
) -> RateEstimate:
    """Fit linear rates to the tail of a converging trace.

    The tail is the last ``tail_fraction`` of the records whose gap
    J(x_k) - J* exceeds the numerical floor.

    Args:
        trace: Records of one run
        j_star: Optimal value J*
        x_star: Minimizer; enables the r-factor of ‖x_k - x*‖ when iterates were kept
        tail_fraction: Share of the above-floor records used for the fit

    Returns:
        RateEstimate
    """
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError(f"tail_fraction must lie in (0, 1], got {tail_fraction}")
    above = []
    for record in trace:
        if not record.J - j_star > RATE_FLOOR:
            break
        above.append(record)
    tail = above[len(above) - math.ceil(tail_fraction * len(above)) :]
    if len(tail) < MIN_TAIL:
        raise ValueError(f"Need at least {MIN_TAIL} tail records above the floor, got {len(tail)}")

    gaps = np.array([r.J - j_star for r in tail])
    q_factor = float(np.exp(np.mean(np.log(gaps[1:] / gaps[:-1]))))
    if not q_factor < 1.0:
        raise ValueError(f"No decrease of J over the tail (q-factor {q_factor:.6g})")

    ks = np.array([r.k for r in tail], dtype=np.float64)
    grads = np.array([r.grad_norm for r in tail])
    positive = grads > 0.0
    r_grad = _r_factor(ks[positive], grads[positive]) if positive.sum() >= 2 else math.nan

    r_x = None
    if x_star is not None and all(r.x is not None for r in tail):
        dists = np.array([np.linalg.norm(r.x - x_star) for r in tail])  # type: ignore[operator]
        nonzero = dists > 0.0
        if nonzero.sum() >= 2:
            r_x = _r_factor(ks[nonzero], dists[nonzero])
    return RateEstimate(q_factor, r_grad, r_x, len(tail))
