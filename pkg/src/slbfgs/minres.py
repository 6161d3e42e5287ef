"""Jacobi-preconditioned MINRES for the seed systems (tau I + S) r = q."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from slbfgs.linalg import LinearOperator
from slbfgs.utils import FloatArray

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveStats:
    """Outcome of one inner solve."""

    iterations: int
    relative_residual: float
    converged: bool
    residual_history: tuple[float, ...] = field(default=(), repr=False)


def pminres(
    op: LinearOperator,
    rhs: FloatArray,
    maxiter: int = 50,
    tol: float = 1e-2,
    x0: FloatArray | None = None,
) -> tuple[FloatArray, SolveStats]:
    """Solve op x = rhs with MINRES preconditioned by M = diag(op).

    Stops as soon as ‖rhs - op x‖ / ‖rhs‖ <= tol. When maxiter is reached
    first, the iterate with the smallest true residual is returned with
    ``converged=False``. ``residual_history`` holds the preconditioned
    residual norm |eta| after each iteration, which MINRES keeps
    non-increasing.

    Args:
        op: Symmetric operator with positive diagonal
        rhs: Right-hand side
        maxiter: Maximum number of Lanczos steps
        tol: Relative residual tolerance
        x0: Starting guess (zero when omitted)

    Returns:
        (x, stats)
    """
    diag = op.diagonal()
    if np.any(diag <= 0.0):
        raise ValueError("Jacobi preconditioner needs a strictly positive diagonal")
    inv_diag = 1.0 / diag

    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return np.zeros_like(rhs), SolveStats(0, 0.0, True)

    x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=np.float64)
    v = rhs - op.apply(x) if x0 is not None else rhs.copy()
    rel = float(np.linalg.norm(v)) / rhs_norm
    if rel <= tol:
        return x, SolveStats(0, rel, True)

    z = inv_diag * v
    gamma = math.sqrt(float(np.dot(z, v)))
    breakdown_tol = 1e-14 * gamma
    gamma_prev = 1.0
    v_prev = np.zeros_like(rhs)
    w = np.zeros_like(rhs)
    w_prev = np.zeros_like(rhs)
    eta = gamma
    c_prev = c = 1.0
    s_prev = s = 0.0

    best_x, best_rel = x.copy(), rel
    history: list[float] = []
    iterations = 0
    for _ in range(maxiter):
        iterations += 1
        z = z / gamma
        az = op.apply(z)
        delta = float(np.dot(az, z))
        v_next = az - (delta / gamma) * v - (gamma / gamma_prev) * v_prev
        z_next = inv_diag * v_next
        gamma_next = math.sqrt(max(float(np.dot(z_next, v_next)), 0.0))

        a0 = c * delta - c_prev * s * gamma
        a1 = math.hypot(a0, gamma_next)
        a2 = s * delta + c_prev * c * gamma
        a3 = s_prev * gamma
        c_next, s_next = a0 / a1, gamma_next / a1

        w_next = (z - a3 * w_prev - a2 * w) / a1
        x = x + (c_next * eta) * w_next
        eta = -s_next * eta
        history.append(abs(eta))

        rel = float(np.linalg.norm(rhs - op.apply(x))) / rhs_norm
        if rel < best_rel:
            best_x, best_rel = x.copy(), rel
        if rel <= tol:
            return x, SolveStats(iterations, rel, True, tuple(history))
        if gamma_next <= breakdown_tol:
            # Lanczos breakdown: the Krylov space is invariant
            logger.debug("MINRES breakdown after %d iterations", iterations)
            break

        v_prev, v = v, v_next
        z = z_next
        gamma_prev, gamma = gamma, gamma_next
        w_prev, w = w, w_next
        c_prev, c = c, c_next
        s_prev, s = s, s_next

    converged = best_rel <= tol
    return best_x, SolveStats(iterations, best_rel, converged, tuple(history))
