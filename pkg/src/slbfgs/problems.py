"""Benchmark problems with a data term D and a cheap regularizer S."""

import logging

import numpy as np

from slbfgs.linalg import DiagonalOperator, LinearOperator, ScaledOperator, laplacian_2d
from slbfgs.optimizer import Problem
from slbfgs.utils import FloatArray, make_rng

logger = logging.getLogger(__name__)

# benchmark table grid: n = 16
DEFAULT_GRID = 4
DEFAULT_ALPHAS = (1e-5, 1e-3, 1e-1)


def _frozen(array: FloatArray) -> FloatArray:
    array.setflags(write=False)
    return array


def make_quadratic(m: int = DEFAULT_GRID, alpha: float = 1e-1) -> Problem:
    """Quadratic J(x) = ½(x - x*)ᵀ(D + αS)(x - x*) on an m×m grid.

    D is diagonal with D_jj = exp(-j), j = 1..n, S is the five-point
    Laplacian and x* is the all-ones vector. The problem starts at x0 = 0.

    Args:
        m: Grid size, n = m²
        alpha: Regularization weight

    Returns:
        Problem with constant regularizer Hessian αS and dense Hessian D + αS
    """
    if m < 1:
        raise ValueError(f"Grid size must be at least 1, got {m}")
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    n = m * m
    data_diag = _frozen(np.exp(-np.arange(1, n + 1, dtype=np.float64)))
    laplacian = laplacian_2d(m)
    data = DiagonalOperator(data_diag)
    regularizer: LinearOperator = ScaledOperator(alpha, laplacian)
    hessian = _frozen(data.to_dense() + alpha * laplacian.to_dense())
    x_star = _frozen(np.ones(n))

    def evaluate(x: FloatArray) -> float:
        e = x - x_star
        return 0.5 * float(e @ (hessian @ e))

    def gradient(x: FloatArray) -> FloatArray:
        return hessian @ (x - x_star)

    def data_gradient(x: FloatArray) -> FloatArray:
        return data.apply(x - x_star)

    return Problem(
        dimension=n,
        evaluate=evaluate,
        gradient=gradient,
        data_gradient=data_gradient,
        regularizer_hessian=lambda x: regularizer,
        dense_hessian=lambda x: hessian.copy(),
        name=f"quadratic(m={m}, alpha={alpha:g})",
        x0=_frozen(np.zeros(n)),
        x_star=x_star,
    )


def make_nonconvex(
    m: int = DEFAULT_GRID,
    alpha: float = 1e-2,
    seed: int | None = 0,
    gamma: float = 1e-2,
    rank: int = 2,
) -> Problem:
    """Smooth non-convex problem with a Laplacian regularizer.

    D(x) = Σ (1 - cos(x_i - x*_i)) + ½γ‖P(x - x*)‖² with a random rank-``rank``
    P, and S(x) = ½α xᵀLx. The minimizer is x* = 0. Every start coordinate is
    π - u_i with u_i uniform on [0.1, 0.6], where cos(x_i) <= -0.8, so the first
    steps cross negative curvature and yield pairs with yᵀs < 0.

    Args:
        m: Grid size, n = m²
        alpha: Regularization weight
        seed: Seed for P and x0
        gamma: Weight of the low-rank coupling term
        rank: Number of rows of P

    Returns:
        Problem with constant regularizer Hessian αL
    """
    if m < 1:
        raise ValueError(f"Grid size must be at least 1, got {m}")
    if alpha < 0.0 or gamma < 0.0:
        raise ValueError(f"alpha and gamma must be non-negative, got alpha={alpha}, gamma={gamma}")
    n = m * m
    rng = make_rng(seed)
    coupling = rng.standard_normal((rank, n)) / np.sqrt(n)
    gram = _frozen(gamma * coupling.T @ coupling)
    x0 = _frozen(np.pi - rng.uniform(0.1, 0.6, n))
    x_star = _frozen(np.zeros(n))
    laplacian = laplacian_2d(m)
    regularizer: LinearOperator = ScaledOperator(alpha, laplacian)
    laplacian_dense = _frozen(laplacian.to_dense())

    def data_value(x: FloatArray) -> float:
        e = x - x_star
        return float(np.sum(1.0 - np.cos(e))) + 0.5 * float(e @ (gram @ e))

    def data_gradient(x: FloatArray) -> FloatArray:
        e = x - x_star
        return np.sin(e) + gram @ e

    def evaluate(x: FloatArray) -> float:
        return data_value(x) + 0.5 * float(x @ regularizer.apply(x))

    def gradient(x: FloatArray) -> FloatArray:
        return data_gradient(x) + regularizer.apply(x)

    def dense_hessian(x: FloatArray) -> FloatArray:
        return np.diag(np.cos(x - x_star)) + gram + alpha * laplacian_dense

    return Problem(
        dimension=n,
        evaluate=evaluate,
        gradient=gradient,
        data_gradient=data_gradient,
        regularizer_hessian=lambda x: regularizer,
        dense_hessian=dense_hessian,
        name=f"nonconvex(m={m}, alpha={alpha:g}, seed={seed})",
        x0=x0,
        x_star=x_star,
    )
