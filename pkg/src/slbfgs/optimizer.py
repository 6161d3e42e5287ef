"""Classical and structured inverse L-BFGS drivers.

Both drivers share one loop. The structured variant builds the seed
B_k⁽⁰⁾ = tau_k I + S_k from the regularizer Hessian, stores pairs cautiously
and picks tau_{k+1} from the safeguarded interval of structured factors; the
classical variant uses H_k⁽⁰⁾ = tau_hat_k I with a Barzilai–Borwein factor.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from slbfgs.linalg import LinearOperator, ZeroOperator
from slbfgs.linesearch import (
    LineSearchConfig,
    LineSearchKind,
    LineSearchResult,
    armijo_backtrack,
    wolfe_search,
)
from slbfgs.memory import InnerSolverConfig, Memory, SeedApplier, SeedMode, two_loop
from slbfgs.minres import SolveStats
from slbfgs.scaling import AdapParams, AdapState, ScalingSet, adap_step, bb_factors, safeguards, structured_factors
from slbfgs.utils import FloatArray, as_vector, constrain

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Problem:
    """Objective J = D + S with its derivatives.

    ``data_gradient`` (∇D) enables the quadratic-regularizer shortcut for z_k,
    ``regularizer_hessian`` supplies S_k, ``dense_hessian`` is only used for
    diagnostics.
    """

    dimension: int
    evaluate: Callable[[FloatArray], float]
    gradient: Callable[[FloatArray], FloatArray]
    data_gradient: Callable[[FloatArray], FloatArray] | None = None
    regularizer_hessian: Callable[[FloatArray], LinearOperator] | None = None
    dense_hessian: Callable[[FloatArray], FloatArray] | None = None
    name: str = "problem"
    x0: FloatArray | None = None
    x_star: FloatArray | None = None


class Strategy(str, Enum):
    """Seed scaling strategy; H* are classical, B* structured."""

    HS = "hs"
    HY = "hy"
    BS = "bs"
    BZ = "bz"
    BU = "bu"
    BG = "bg"
    ADAP = "adap"

    @property
    def structured(self) -> bool:
        """Whether the strategy uses the structured seed tau I + S."""
        return self not in (Strategy.HS, Strategy.HY)


@dataclass(frozen=True)
class CautiousParams:
    """Constants of the two cautious updates."""

    c_s: float = 1e-9
    c0: float = 1e-6
    C0: float = 1e6  # noqa: N815
    c1: float = 1e-6
    c2: float = 1.0

    def __post_init__(self) -> None:
        if self.c_s <= 0.0:
            raise ValueError(f"c_s must be positive, got {self.c_s}")
        if not 0.0 <= self.c0 <= self.C0:
            raise ValueError(f"Need 0 <= c0 <= C0, got c0={self.c0}, C0={self.C0}")
        if self.c1 <= 0.0 or self.c2 <= 0.0:
            raise ValueError(f"c1 and c2 must be positive, got c1={self.c1}, c2={self.c2}")


@dataclass(frozen=True)
class StoppingRule:
    """Gradient-norm rule plus the optional FAIR-style triple.

    The gradient rule ‖∇J‖ <= grad_tol is always checked.
    """

    grad_tol: float = 1e-13
    fair_triple: bool = False
    tol_j: float = 1e-5
    tol_x: float = 1e-3
    tol_g: float = 1e-3

    def __post_init__(self) -> None:
        if self.grad_tol < 0.0:
            raise ValueError(f"grad_tol must be non-negative, got {self.grad_tol}")
        if self.grad_tol == 0.0 and not self.fair_triple:
            logger.debug("Only an exactly zero gradient terminates this rule")


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings shared by both drivers.

    ``memory=None`` keeps every accepted pair. ``inner=None`` solves the seed
    system exactly.
    """

    memory: int | None = 5
    seed_strategy: Strategy = Strategy.BS
    cautious: CautiousParams = field(default_factory=CautiousParams)
    tau0: float = 1.0
    line_search: LineSearchConfig = field(default_factory=LineSearchConfig)
    inner: InnerSolverConfig | None = None
    stopping: StoppingRule = field(default_factory=StoppingRule)
    max_iter: int = 10000
    use_quadratic_shortcut: bool = False
    adap: AdapParams = field(default_factory=AdapParams)
    keep_iterates: bool = False

    def __post_init__(self) -> None:
        if self.memory is not None and self.memory < 0:
            raise ValueError(f"memory must be non-negative, got {self.memory}")
        if not self.tau0 > 0.0:
            raise ValueError(f"tau0 must be positive, got {self.tau0}")
        if self.max_iter < 0:
            raise ValueError(f"max_iter must be non-negative, got {self.max_iter}")


@dataclass(frozen=True, eq=False)
class IterationRecord:
    """Trace entry for iterate x_k.

    J and grad_norm describe x_k; the remaining fields describe the step taken
    from x_k. The last record of a trace is partial: only J and grad_norm are
    set.
    ``tau_kept`` is True when tau_next lies outside [tau_lower, tau_upper]
    because that interval holds no positive value.
    """

    k: int
    J: float  # noqa: N815
    grad_norm: float
    alpha: float | None = None
    tau: float | None = None
    n_line_search: int | None = None
    n_grad_evals: int | None = None
    pair_accepted: bool | None = None
    pair_rho: float | None = None
    pair_s_norm_sq: float | None = None
    rho_sign: int | None = None
    inner_stats: SolveStats | None = None
    fallback_used: bool | None = None
    tau_next: float | None = None
    tau_kept: bool | None = None
    tau_lower: float | None = None
    tau_upper: float | None = None
    omega_l: float | None = None
    omega_u: float | None = None
    cos_newton: float | None = None
    ratio_newton: float | None = None
    x: FloatArray | None = field(default=None, repr=False)
    d: FloatArray | None = field(default=None, repr=False)

    @property
    def partial(self) -> bool:
        """Whether this is the final record without a step."""
        return self.alpha is None


class Status(str, Enum):
    """Termination reason of a run."""

    CONVERGED_GRAD = "converged_grad"
    CONVERGED_FAIR = "converged_fair"
    MAX_ITER = "max_iter"
    NON_FINITE = "non_finite"
    LINE_SEARCH_FAILED = "line_search_failed"

    @property
    def converged(self) -> bool:
        """Whether a stopping rule fired."""
        return self in (Status.CONVERGED_GRAD, Status.CONVERGED_FAIR)


@dataclass(frozen=True, eq=False)
class OptimizeResult:
    """Final iterate, trace and termination status of a run."""

    x: FloatArray
    trace: tuple[IterationRecord, ...]
    status: Status
    message: str
    n_fevals: int
    n_gevals: int
    offending: FloatArray | None = None

    @property
    def iterations(self) -> int:
        """Number of completed iterations."""
        return sum(1 for record in self.trace if not record.partial)

    @property
    def mean_line_searches(self) -> float:
        """Average number of line search trials per iteration."""
        counts = [r.n_line_search for r in self.trace if r.n_line_search is not None]
        return float(np.mean(counts)) if counts else 0.0

    @property
    def fallback_count(self) -> int:
        """Number of iterations that used the diagonal fallback direction."""
        return sum(1 for r in self.trace if r.fallback_used)

    def as_tuple(self) -> tuple[FloatArray, tuple[IterationRecord, ...], Status]:
        """Return (x_final, trace, status)."""
        return self.x, self.trace, self.status


def check_stopping(
    record_prev: IterationRecord,
    record_curr: IterationRecord,
    x_prev: FloatArray,
    x_curr: FloatArray,
    rule: StoppingRule,
    j_initial: float,
) -> Status | None:
    """Decide whether to stop at x_curr.

    Args:
        record_prev: Record of the previous iterate
        record_curr: Record of the current iterate (J and grad_norm set)
        x_prev: Previous iterate
        x_curr: Current iterate
        rule: Stopping rule
        j_initial: J(x_0), used to scale the FAIR tolerances

    Returns:
        The converged status, or None to continue
    """
    if record_curr.grad_norm <= rule.grad_tol:
        return Status.CONVERGED_GRAD
    if rule.fair_triple:
        scale = 1.0 + abs(j_initial)
        small_change = abs(record_curr.J - record_prev.J) <= rule.tol_j * scale
        small_step = float(np.linalg.norm(x_curr - x_prev)) <= rule.tol_x * (
            1.0 + float(np.linalg.norm(x_curr))
        )
        small_grad = record_curr.grad_norm <= rule.tol_g * scale
        if small_change and small_step and small_grad:
            return Status.CONVERGED_FAIR
    return None


def _is_descent(grad: FloatArray, d: FloatArray) -> bool:
    return bool(np.all(np.isfinite(d))) and float(np.dot(grad, d)) < 0.0


def choose_direction_with_fallback(
    grad: FloatArray, mem: Memory, seed: SeedApplier
) -> tuple[FloatArray, bool, SolveStats | None]:
    """Two-loop direction, guarded against non-descent from inexact solves.

    A non-descent direction triggers one re-solve with a ten times tighter
    inner tolerance, then the diagonally scaled steepest descent direction
    -(diag(tau I + S))⁻¹ grad.

    Args:
        grad: Gradient (nonzero)
        mem: Stored pairs
        seed: Seed applier

    Returns:
        (d, fallback_used, stats of the last seed solve)
    """
    d, stats = two_loop(grad, mem, seed)
    if _is_descent(grad, d):
        return d, False, stats
    if seed.mode is SeedMode.STRUCTURED and seed.inner is not None:
        tighter = InnerSolverConfig(seed.inner.maxiter, seed.inner.tol / 10.0)
        d, stats = two_loop(grad, mem, seed, tighter)
        if _is_descent(grad, d):
            return d, False, stats
    logger.warning("Two-loop direction is not a descent direction; using diagonal fallback")
    return -grad / seed.diagonal(grad.shape[0]), True, stats


class _Ray:
    """Evaluates J and ∇J along x + alpha d, caching gradients by alpha."""

    def __init__(self, problem: Problem, x: FloatArray, d: FloatArray) -> None:
        self.problem = problem
        self.x = x
        self.d = d
        self.n_grad = 0
        self._grads: dict[float, FloatArray] = {}

    def point(self, alpha: float) -> FloatArray:
        return self.x + alpha * self.d

    def value(self, alpha: float) -> float:
        return float(self.problem.evaluate(self.point(alpha)))

    def gradient(self, alpha: float) -> FloatArray:
        if alpha not in self._grads:
            self._grads[alpha] = np.asarray(self.problem.gradient(self.point(alpha)), dtype=np.float64)
            self.n_grad += 1
        return self._grads[alpha]

    def slope(self, alpha: float) -> float:
        return float(np.dot(self.gradient(alpha), self.d))


def _search(ray: _Ray, j: float, slope: float, cfg: LineSearchConfig) -> LineSearchResult:
    if cfg.kind is LineSearchKind.ARMIJO:
        return armijo_backtrack(ray.value, j, slope, cfg)
    return wolfe_search(ray.value, ray.slope, j, slope, cfg)


def _select_tau(
    strategy: Strategy,
    factors: ScalingSet,
    state: AdapState,
    nu: int,
    j_prev: float,
    j_curr: float,
    k: int,
) -> tuple[float, AdapState]:
    if strategy is Strategy.ADAP:
        return adap_step(state, factors, nu, j_prev, j_curr, k)
    if strategy is Strategy.BS:
        return factors.tau_s, state
    if factors.rho > 0.0:
        if strategy is Strategy.BZ and factors.tau_z is not None:
            return factors.tau_z, state
        if strategy is Strategy.BU and factors.tau_u is not None:
            return factors.tau_u, state
    # Bg, and Bz/Bu on the zᵀs <= 0 branch
    return factors.tau_g, state


def _sign(value: float) -> int:
    return int(math.copysign(1, value)) if value != 0.0 else 0


def _minimize(problem: Problem, x0: FloatArray, cfg: OptimizerConfig) -> OptimizeResult:
    structured = cfg.seed_strategy.structured
    n = problem.dimension
    x = as_vector(x0, "x0").copy()
    if x.shape != (n,):
        raise ValueError(f"x0 has length {x.shape[0]}, problem dimension is {n}")
    if structured and cfg.use_quadratic_shortcut and problem.data_gradient is None:
        raise ValueError("The quadratic shortcut needs problem.data_gradient")
    rule = cfg.stopping
    safe = cfg.cautious
    keep = cfg.keep_iterates

    j = float(problem.evaluate(x))
    g = np.asarray(problem.gradient(x), dtype=np.float64)
    n_fevals, n_gevals = 1, 1
    trace: list[IterationRecord] = []

    def finish(status: Status, message: str, offending: FloatArray | None = None) -> OptimizeResult:
        log = logger.info if status.converged else logger.warning
        log(
            "%s (%s): %s after %d iterations, J=%.6e",
            problem.name,
            cfg.seed_strategy.value,
            status.value,
            len(trace) - 1,
            trace[-1].J if trace else j,
        )
        return OptimizeResult(x, tuple(trace), status, message, n_fevals, n_gevals, offending)

    if not (math.isfinite(j) and np.all(np.isfinite(g))):
        return finish(Status.NON_FINITE, "non-finite objective or gradient at x0", x.copy())

    j0 = j
    gnorm = float(np.linalg.norm(g))
    if gnorm <= rule.grad_tol:
        trace.append(IterationRecord(0, j, gnorm, x=x.copy() if keep else None))
        return finish(Status.CONVERGED_GRAD, "gradient tolerance met at x0")

    mem = Memory(cfg.memory)
    c_s = safe.c_s if structured else 0.0
    tau = cfg.tau0
    adap_state = AdapState.initial(cfg.adap)
    reg: LinearOperator = ZeroOperator(n)
    if structured and problem.regularizer_hessian is not None:
        reg = problem.regularizer_hessian(x)
    shortcut = structured and cfg.use_quadratic_shortcut
    data_grad = problem.data_gradient(x) if shortcut and problem.data_gradient else None

    for k in range(cfg.max_iter):
        if structured:
            seed = SeedApplier.structured(tau, reg, cfg.inner)
        else:
            seed = SeedApplier.identity(tau)
        d, fallback, stats = choose_direction_with_fallback(g, mem, seed)

        ray = _Ray(problem, x, d)
        ls = _search(ray, j, float(np.dot(g, d)), cfg.line_search)
        n_trials, n_fevals = ls.n_evals, n_fevals + ls.n_evals
        if not ls.success and not ls.value < j and not fallback:
            logger.warning("Line search failed at k=%d; retrying along the diagonal fallback", k)
            fallback = True
            n_gevals += ray.n_grad
            d = -g / seed.diagonal(n)
            ray = _Ray(problem, x, d)
            ls = _search(ray, j, float(np.dot(g, d)), cfg.line_search)
            n_trials, n_fevals = n_trials + ls.n_evals, n_fevals + ls.n_evals
        if not ls.success:
            if not ls.value < j:
                n_gevals += ray.n_grad
                trace.append(IterationRecord(k, j, gnorm, x=x.copy() if keep else None))
                return finish(Status.LINE_SEARCH_FAILED, f"no decrease found at iteration {k}")
            logger.warning("Line search conditions not met at k=%d; accepting decrease", k)

        alpha = ls.alpha
        x_new = ray.point(alpha)
        j_new = ls.value
        g_new = ray.gradient(alpha)
        n_gevals += ray.n_grad
        if not (math.isfinite(j_new) and np.all(np.isfinite(g_new))):
            trace.append(IterationRecord(k, j, gnorm, x=x.copy() if keep else None))
            return finish(Status.NON_FINITE, f"non-finite values at iteration {k + 1}", x_new)

        s = x_new - x
        y = g_new - g
        if not np.any(s):
            trace.append(IterationRecord(k, j, gnorm, x=x.copy() if keep else None))
            return finish(Status.LINE_SEARCH_FAILED, f"step vanished at iteration {k}")
        accepted = mem.try_store(s, y, c_s)
        gnorm_new = float(np.linalg.norm(g_new))

        record = IterationRecord(
            k,
            j,
            gnorm,
            alpha=alpha,
            tau=tau,
            n_line_search=n_trials,
            n_grad_evals=ray.n_grad,
            pair_accepted=accepted,
            pair_rho=float(np.dot(y, s)),
            pair_s_norm_sq=float(np.dot(s, s)),
            inner_stats=stats,
            fallback_used=fallback,
            x=x.copy() if keep else None,
            d=d.copy() if keep else None,
        )
        candidate = IterationRecord(k + 1, j_new, gnorm_new, x=x_new.copy() if keep else None)
        logger.debug(
            "k=%d J=%.6e |g|=%.3e alpha=%.3e tau=%.3e nu=%d accepted=%s",
            k, j, gnorm, alpha, tau, n_trials, accepted,
        )

        decision = check_stopping(record, candidate, x, x_new, rule, j0)
        if decision is not None:
            trace.extend((record, candidate))
            x = x_new
            return finish(decision, f"{decision.value} at iteration {k + 1}")

        if structured:
            if problem.regularizer_hessian is not None:
                reg = problem.regularizer_hessian(x_new)
            if shortcut:
                assert problem.data_gradient is not None and data_grad is not None
                data_grad_new = problem.data_gradient(x_new)
                z = data_grad_new - data_grad
                data_grad = data_grad_new
            else:
                z = y - reg.apply(s)
            omega = safeguards(gnorm_new, safe.c0, safe.C0, safe.c1, safe.c2)
            factors = structured_factors(s, z, omega.omega_l, omega.omega_u)
            tau_next, adap_state = _select_tau(
                cfg.seed_strategy, factors, adap_state, n_trials, j, j_new, k
            )
            tau_kept = False
            if not tau_next > 0.0:
                # previous tau clamped into [tau_lower, tau_upper]; kept as is
                # only when that interval holds no positive value
                clamped = constrain(tau, factors.tau_s, factors.upper)
                tau_kept = not clamped > 0.0
                logger.warning(
                    "Selected tau=%g is not positive; using tau=%g (kept=%s)",
                    tau_next, tau if tau_kept else clamped, tau_kept,
                )
                tau_next = tau if tau_kept else clamped
            record = _with_scaling(record, factors, omega.omega_l, omega.omega_u, tau_next, tau_kept)
        else:
            rho = record.pair_rho
            assert rho is not None
            tau_next = tau
            if rho > 0.0:
                tau_hat_y, tau_hat_s = bb_factors(s, y)
                tau_next = tau_hat_s if cfg.seed_strategy is Strategy.HS else tau_hat_y
            record = replace(record, rho_sign=_sign(rho), tau_next=tau_next)

        trace.append(record)
        x, j, g, gnorm, tau = x_new, j_new, g_new, gnorm_new, tau_next

    trace.append(IterationRecord(cfg.max_iter, j, gnorm, x=x.copy() if keep else None))
    return finish(Status.MAX_ITER, f"reached max_iter={cfg.max_iter}")


def _with_scaling(
    record: IterationRecord,
    factors: ScalingSet,
    omega_l: float,
    omega_u: float,
    tau_next: float,
    tau_kept: bool,
) -> IterationRecord:
    return replace(
        record,
        rho_sign=_sign(factors.rho),
        tau_next=tau_next,
        tau_kept=tau_kept,
        tau_lower=factors.tau_s,
        tau_upper=factors.upper,
        omega_l=omega_l,
        omega_u=omega_u,
    )


def slbfgs_minimize(problem: Problem, x0: FloatArray, cfg: OptimizerConfig | None = None) -> OptimizeResult:
    """Minimize J = D + S with the structured inverse L-BFGS method.

    Args:
        problem: Objective; ``regularizer_hessian`` defaults to S_k = 0
        x0: Starting point
        cfg: Settings; ``cfg.seed_strategy`` must be structured (Bs, Bz, Bu, Bg, Adap)

    Returns:
        OptimizeResult with a strictly decreasing trace of J
    """
    cfg = cfg or OptimizerConfig()
    if not cfg.seed_strategy.structured:
        raise ValueError(f"Strategy {cfg.seed_strategy.value} is not a structured strategy")
    return _minimize(problem, x0, cfg)


def lbfgs_minimize(problem: Problem, x0: FloatArray, cfg: OptimizerConfig | None = None) -> OptimizeResult:
    """Minimize J with classical inverse L-BFGS and Barzilai–Borwein seeds.

    Pairs are stored whenever yᵀs > 0; no safeguard interval is applied.

    Args:
        problem: Objective
        x0: Starting point
        cfg: Settings; ``cfg.seed_strategy`` must be Hs or Hy

    Returns:
        OptimizeResult
    """
    cfg = cfg or OptimizerConfig(seed_strategy=Strategy.HY)
    if cfg.seed_strategy.structured:
        raise ValueError(f"Strategy {cfg.seed_strategy.value} is not a classical strategy")
    return _minimize(problem, x0, cfg)


def minimize(problem: Problem, x0: FloatArray, cfg: OptimizerConfig) -> OptimizeResult:
    """Dispatch to the classical or structured driver by ``cfg.seed_strategy``."""
    if cfg.seed_strategy.structured:
        return slbfgs_minimize(problem, x0, cfg)
    return lbfgs_minimize(problem, x0, cfg)
