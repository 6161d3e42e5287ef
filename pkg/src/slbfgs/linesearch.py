"""Step-length selection: Armijo backtracking and (strong) Wolfe–Powell search.

Both searches work on the one-dimensional restriction phi(alpha) = J(x + alpha d)
and always start from the quasi-Newton step alpha = 1.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum

logger = logging.getLogger(__name__)

ScalarFunction = Callable[[float], float]


class LineSearchKind(str, Enum):
    """Acceptance conditions for the step length."""

    ARMIJO = "armijo"
    WOLFE = "wolfe"
    STRONG_WOLFE = "strong-wolfe"


@dataclass(frozen=True)
class LineSearchConfig:
    """Line search constants.

    ``beta`` and ``max_steps`` drive Armijo backtracking; ``eta``, ``maxfev``,
    ``stpmax``, ``stpmin`` and ``xtol`` drive the Wolfe searches.
    """

    kind: LineSearchKind = LineSearchKind.ARMIJO
    sigma: float = 1e-4
    beta: float = 0.5
    eta: float = 0.9
    max_steps: int = 50
    maxfev: int = 3000
    stpmax: float = 2.0
    stpmin: float = 0.0
    xtol: float = 1e-6

    def __post_init__(self) -> None:
        if not 0.0 < self.sigma < 1.0:
            raise ValueError(f"sigma must lie in (0, 1), got {self.sigma}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.kind is not LineSearchKind.ARMIJO and not self.sigma < self.eta < 1.0:
            raise ValueError(f"Need sigma < eta < 1, got sigma={self.sigma}, eta={self.eta}")
        if self.max_steps < 1 or self.maxfev < 1:
            raise ValueError("max_steps and maxfev must be positive")
        if not 0.0 <= self.stpmin < self.stpmax:
            raise ValueError(f"Need 0 <= stpmin < stpmax, got [{self.stpmin}, {self.stpmax}]")

    @classmethod
    def armijo(cls, sigma: float = 1e-4, beta: float = 0.5, max_steps: int = 50) -> "LineSearchConfig":
        """Backtracking with the FAIR-style defaults."""
        return cls(LineSearchKind.ARMIJO, sigma=sigma, beta=beta, max_steps=max_steps)

    @classmethod
    def wolfe(cls, strong: bool = False, sigma: float = 1e-4, eta: float = 0.9) -> "LineSearchConfig":
        """Wolfe–Powell search with the Moré–Thuente style defaults."""
        kind = LineSearchKind.STRONG_WOLFE if strong else LineSearchKind.WOLFE
        return cls(kind, sigma=sigma, eta=eta)


@dataclass(frozen=True)
class LineSearchResult:
    """Accepted (or last tried) step and its cost."""

    alpha: float
    n_evals: int
    n_grad_evals: int
    success: bool
    value: float
    derivative: float | None = None


def _finite_or_inf(value: float) -> float:
    return value if math.isfinite(value) else math.inf


def _sufficient_decrease(value: float, phi0: float, alpha: float, slope0: float, sigma: float) -> bool:
    # strict decrease is also required so that J can never stall in floating point
    return value <= phi0 + sigma * alpha * slope0 and value < phi0


def armijo_backtrack(
    phi: ScalarFunction, phi0: float, slope0: float, cfg: LineSearchConfig
) -> LineSearchResult:
    """Largest alpha in {1, beta, beta², ...} satisfying the Armijo condition.

    Args:
        phi: alpha -> J(x + alpha d)
        phi0: J(x)
        slope0: ∇J(x)ᵀd (negative)
        cfg: Line search constants

    Returns:
        LineSearchResult; ``n_evals`` is the number of trials nu
    """
    if slope0 >= 0.0:
        raise ValueError(f"Not a descent direction: slope {slope0}")
    alpha = 1.0
    value = math.inf
    for trial in range(1, cfg.max_steps + 1):
        value = _finite_or_inf(phi(alpha))
        if _sufficient_decrease(value, phi0, alpha, slope0, cfg.sigma):
            return LineSearchResult(alpha, trial, 0, True, value)
        if trial < cfg.max_steps:
            alpha *= cfg.beta
    return LineSearchResult(alpha, cfg.max_steps, 0, False, value)


def _interpolate(
    lo: float, f_lo: float, g_lo: float, hi: float, f_hi: float, g_hi: float | None
) -> float:
    """Minimizer of the cubic (or quadratic) interpolant, safeguarded by bisection."""
    width = hi - lo
    trial = math.nan
    if g_hi is not None and math.isfinite(f_hi):
        d1 = g_lo + g_hi - 3.0 * (f_lo - f_hi) / (lo - hi)
        disc = d1 * d1 - g_lo * g_hi
        if disc >= 0.0:
            d2 = math.copysign(math.sqrt(disc), width)
            denom = g_hi - g_lo + 2.0 * d2
            if denom != 0.0:
                trial = hi - width * (g_hi + d2 - d1) / denom
    if not math.isfinite(trial) and math.isfinite(f_hi):
        curvature = f_hi - f_lo - g_lo * width
        if curvature > 0.0:
            trial = lo - g_lo * width * width / (2.0 * curvature)
    low, high = sorted((lo + 0.1 * width, hi - 0.1 * width))
    if not math.isfinite(trial) or not low <= trial <= high:
        trial = lo + 0.5 * width
    return trial


def wolfe_search(
    phi: ScalarFunction,
    dphi: ScalarFunction,
    phi0: float,
    slope0: float,
    cfg: LineSearchConfig,
) -> LineSearchResult:
    """Bracketing and zoom search for a (strong) Wolfe–Powell step.

    Args:
        phi: alpha -> J(x + alpha d)
        dphi: alpha -> ∇J(x + alpha d)ᵀd
        phi0: J(x)
        slope0: ∇J(x)ᵀd (negative)
        cfg: Line search constants; ``cfg.kind`` selects weak or strong

    Returns:
        LineSearchResult; on failure the best Armijo step seen (if any)
    """
    if slope0 >= 0.0:
        raise ValueError(f"Not a descent direction: slope {slope0}")
    strong = cfg.kind is LineSearchKind.STRONG_WOLFE
    n_evals = n_grad = 0

    def curvature_ok(slope: float) -> bool:
        if strong:
            return abs(slope) <= cfg.eta * abs(slope0)
        return slope >= cfg.eta * slope0

    def armijo_ok(alpha: float, value: float) -> bool:
        return _sufficient_decrease(value, phi0, alpha, slope0, cfg.sigma)

    def zoom(
        lo: float, f_lo: float, g_lo: float, hi: float, f_hi: float, g_hi: float | None
    ) -> LineSearchResult:
        nonlocal n_evals, n_grad
        while n_evals < cfg.maxfev:
            if abs(hi - lo) <= cfg.xtol * max(lo, hi) or max(lo, hi) <= cfg.stpmin:
                logger.debug("Wolfe bracket collapsed at [%g, %g]", lo, hi)
                break
            alpha = _interpolate(lo, f_lo, g_lo, hi, f_hi, g_hi)
            value = _finite_or_inf(phi(alpha))
            n_evals += 1
            if not armijo_ok(alpha, value) or value >= f_lo:
                hi, f_hi, g_hi = alpha, value, None
                continue
            slope = dphi(alpha)
            n_grad += 1
            if curvature_ok(slope):
                return LineSearchResult(alpha, n_evals, n_grad, True, value, slope)
            if slope * (hi - lo) >= 0.0:
                hi, f_hi, g_hi = lo, f_lo, g_lo
            lo, f_lo, g_lo = alpha, value, slope
        return give_up(lo, f_lo, g_lo, hi, f_hi, g_hi)

    def give_up(
        lo: float, f_lo: float, g_lo: float, hi: float, f_hi: float, g_hi: float | None
    ) -> LineSearchResult:
        # any lo > 0 satisfies the Armijo condition, so prefer it
        if lo > 0.0:
            return LineSearchResult(lo, n_evals, n_grad, False, f_lo, g_lo)
        return LineSearchResult(hi, n_evals, n_grad, False, f_hi, g_hi)

    alpha_prev, f_prev, g_prev = 0.0, phi0, slope0
    alpha = min(1.0, cfg.stpmax)
    while n_evals < cfg.maxfev:
        value = _finite_or_inf(phi(alpha))
        n_evals += 1
        if not armijo_ok(alpha, value) or (alpha_prev > 0.0 and value >= f_prev):
            return zoom(alpha_prev, f_prev, g_prev, alpha, value, None)
        slope = dphi(alpha)
        n_grad += 1
        if curvature_ok(slope):
            return LineSearchResult(alpha, n_evals, n_grad, True, value, slope)
        if slope >= 0.0:
            return zoom(alpha, value, slope, alpha_prev, f_prev, g_prev)
        if alpha >= cfg.stpmax:
            logger.debug("Wolfe search reached stpmax=%g without curvature condition", cfg.stpmax)
            return LineSearchResult(alpha, n_evals, n_grad, False, value, slope)
        alpha_prev, f_prev, g_prev = alpha, value, slope
        alpha = min(2.0 * alpha, cfg.stpmax)
    return give_up(alpha_prev, f_prev, g_prev, alpha, math.inf, None)
