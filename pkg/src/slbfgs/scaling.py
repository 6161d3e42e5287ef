"""Seed scaling factors, cautious safeguards and the adaptive tau controller."""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from slbfgs.utils import FloatArray, constrain, weighted_geometric_mean


@dataclass(frozen=True)
class ScalingSet:
    """Structured scaling factors for one (s, z) pair.

    ``tau_z`` and ``tau_u`` are None when rho = zᵀs is zero. The ``raw_*``
    fields hold the values before projection onto [tau_min, tau_max].
    """

    tau_s: float
    tau_g: float
    tau_z: float | None
    tau_u: float | None
    rho: float
    lam: float
    tau_min: float
    tau_max: float
    raw_s: float
    raw_g: float
    raw_z: float | None = None
    raw_u: float | None = None

    @property
    def upper(self) -> float:
        """Upper end of the admissible interval for tau_{k+1}."""
        if self.rho > 0.0 and self.tau_z is not None:
            return self.tau_z
        return self.tau_g


@dataclass(frozen=True)
class SafeguardInterval:
    """Cautious interval [omega_l, omega_u] used as [tau_min, tau_max]."""

    omega_l: float
    omega_u: float

    def __post_init__(self) -> None:
        if not self.omega_l <= self.omega_u:
            raise ValueError(f"Empty safeguard interval [{self.omega_l}, {self.omega_u}]")


@dataclass(frozen=True)
class AdapParams:
    """Constants of the adaptive tau controller.

    The default progress shifts (eta0, eta1, eta2) are not increasing; they
    are kept exactly as tabulated.
    """

    delta0: float = 0.75
    delta1: float = 0.1
    eps0: float = 1e-3
    eps1: float = 1e-4
    eta0: float = 0.025
    eta1: float = 0.1
    eta2: float = 0.05
    beta_adap: float = 0.01

    def __post_init__(self) -> None:
        if not 0.5 <= self.delta0 <= 1.0:
            raise ValueError(f"delta0 must lie in [0.5, 1], got {self.delta0}")
        if not 0.0 <= self.delta1 <= 1.0:
            raise ValueError(f"delta1 must lie in [0, 1], got {self.delta1}")
        if not 0.0 < self.eps1 < self.eps0 < 1.0:
            raise ValueError(f"Need 0 < eps1 < eps0 < 1, got eps1={self.eps1}, eps0={self.eps0}")
        for name in ("eta0", "eta1", "eta2", "beta_adap"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {value}")


@dataclass(frozen=True)
class AdapState:
    """Weights (w_s, w_g, w_z) of the weighted geometric mean of tau factors."""

    w_s: float
    w_g: float
    w_z: float
    params: AdapParams = field(default_factory=AdapParams)

    def __post_init__(self) -> None:
        if min(self.weights) < 0.0 or abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError(f"Weights must lie on the unit simplex, got {self.weights}")

    @classmethod
    def initial(cls, params: AdapParams | None = None) -> "AdapState":
        """State used before the first step; prefers tau_s."""
        params = params or AdapParams()
        return cls(params.delta0, 1.0 - params.delta0, 0.0, params)

    @property
    def weights(self) -> tuple[float, float, float]:
        """Return (w_s, w_g, w_z)."""
        return (self.w_s, self.w_g, self.w_z)


def bb_factors(s: FloatArray, y: FloatArray) -> tuple[float, float]:
    """Barzilai–Borwein scaling factors for an identity-scaled inverse seed.

    Args:
        s: Step s_k
        y: Gradient difference y_k

    Returns:
        (tau_hat_y, tau_hat_s) = (ρ/‖y‖², ‖s‖²/ρ) with ρ = yᵀs
    """
    rho = float(np.dot(y, s))
    if rho == 0.0:
        raise ValueError("BB factors are undefined for yᵀs = 0")
    return rho / float(np.dot(y, y)), float(np.dot(s, s)) / rho


def proj_interval(t: float, tau_min: float, tau_max: float) -> float:
    """Clamp t to [tau_min, tau_max]."""
    if tau_min > tau_max:
        raise ValueError(f"Invalid interval: tau_min={tau_min} > tau_max={tau_max}")
    return constrain(t, tau_min, tau_max)


def structured_factors(
    s: FloatArray, z: FloatArray, tau_min: float = 0.0, tau_max: float = math.inf
) -> ScalingSet:
    """Compute the structured factors tau_s, tau_g, tau_z and tau_u.

    Args:
        s: Step s_k (nonzero)
        z: Structured secant residual z_k = y_k - S_{k+1} s_k
        tau_min: Lower projection bound
        tau_max: Upper projection bound

    Returns:
        ScalingSet with projected and raw values
    """
    if tau_min > tau_max:
        raise ValueError(f"Invalid interval: tau_min={tau_min} > tau_max={tau_max}")
    ss = float(np.dot(s, s))
    if ss == 0.0:
        raise ValueError("Scaling factors require s != 0")
    zz = float(np.dot(z, z))
    rho = float(np.dot(z, s))

    # smaller eigenvalue of the Gram matrix [[ss, rho], [rho, zz]], computed
    # as det / lambda_max to avoid cancellation
    lam_max = 0.5 * (ss + zz + math.sqrt((ss - zz) ** 2 + 4.0 * rho * rho))
    det = max(ss * zz - rho * rho, 0.0)
    lam = det / lam_max if lam_max > 0.0 else 0.0

    raw_s = rho / ss
    raw_g = math.sqrt(zz / ss)
    raw_z = raw_u = None
    tau_z = tau_u = None
    if rho != 0.0:
        raw_z = zz / rho
        raw_u = (zz - lam) / rho
        tau_z = constrain(raw_z, tau_min, tau_max)
        tau_u = constrain(raw_u, tau_min, tau_max)

    return ScalingSet(
        tau_s=constrain(raw_s, tau_min, tau_max),
        tau_g=constrain(raw_g, tau_min, tau_max),
        tau_z=tau_z,
        tau_u=tau_u,
        rho=rho,
        lam=lam,
        tau_min=tau_min,
        tau_max=tau_max,
        raw_s=raw_s,
        raw_g=raw_g,
        raw_z=raw_z,
        raw_u=raw_u,
    )


def safeguards(
    grad_norm: float, c0: float, C0: float, c1: float, c2: float  # noqa: N803
) -> SafeguardInterval:
    """Cautious bounds for tau_{k+1} from the gradient norm at x_{k+1}.

    A zero gradient norm yields omega_u = inf.

    Args:
        grad_norm: ‖∇J(x_{k+1})‖
        c0: Lower cap (≥ 0)
        C0: Upper floor (≥ c0, may be inf)
        c1: Gradient-norm coefficient (> 0)
        c2: Gradient-norm exponent (> 0)

    Returns:
        SafeguardInterval(min{c0, c1 g^c2}, max{C0, (c1 g^c2)⁻¹})
    """
    if grad_norm < 0.0:
        raise ValueError(f"Gradient norm must be non-negative, got {grad_norm}")
    if not 0.0 <= c0 <= C0:
        raise ValueError(f"Need 0 <= c0 <= C0, got c0={c0}, C0={C0}")
    t = c1 * grad_norm**c2
    upper = math.inf if t == 0.0 else 1.0 / t
    return SafeguardInterval(min(c0, t), max(C0, upper))


def adap_step(
    state: AdapState,
    factors: ScalingSet,
    nu: int,
    j_prev: float,
    j_curr: float,
    k: int,
) -> tuple[float, AdapState]:
    """One step of the adaptive tau controller.

    Weight moves from tau_s to tau_g, and later from tau_g to tau_z, at a
    speed proportional to the number of line search trials ``nu``.

    Args:
        state: Weights after the previous step
        factors: Factors computed with the current safeguard interval
        nu: Line search trials taken in this iteration (≥ 1)
        j_prev: J(x_k)
        j_curr: J(x_{k+1})
        k: Iteration index

    Returns:
        (tau_{k+1}, new state)
    """
    p = state.params
    if k == 0:
        w_s, w_g, w_z = p.delta0, 1.0 - p.delta0, 0.0
    else:
        change = abs(j_curr - j_prev)
        if change <= p.eps1 * abs(j_prev):
            shift = p.eta2
        elif change <= p.eps0 * abs(j_prev):
            shift = p.eta1
        else:
            shift = p.eta0
        w_s, w_g, w_z = state.weights
        if state.w_s > 0.0:
            w_s = max(state.w_s - shift * nu, 0.0)
            w_g = 1.0 - w_s
        if state.w_g >= 1.0 or state.w_z > 0.0:
            w_g = max(state.w_g - p.beta_adap * nu, p.delta1)
            w_z = 1.0 - w_g
    new_state = replace(state, w_s=w_s, w_g=w_g, w_z=w_z)

    if factors.rho > 0.0 and factors.tau_z is not None:
        tau = weighted_geometric_mean(
            (factors.tau_s, factors.tau_g, factors.tau_z), (w_s, w_g, w_z)
        )
    else:
        # zᵀs <= 0: tau_z is never evaluated, the admissible branch ends at tau_g
        tau = factors.tau_g
    return tau, new_state
