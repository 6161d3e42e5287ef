"""Vector helpers, symmetric linear operators and a dense BFGS oracle.

Operators are immutable after construction. The five-point Laplacian is
applied matrix free through a Numba JIT kernel; its dense form is only
assembled on request (tests, exact seed solves at desk scale).
"""

from abc import ABC, abstractmethod
from collections.abc import Sequence
from functools import cached_property
from typing import Any

import numpy as np
from numba import njit  # type: ignore[import-untyped]

from slbfgs.utils import FloatArray, as_vector


@njit(cache=True)
def _stencil_apply(v: Any, m: Any) -> Any:  # type: ignore[misc]
    """Five-point negative Laplacian with zero Dirichlet boundary (JIT compiled).

    Args:
        v: Grid values in row-major order (length m*m)
        m: Interior grid points per side

    Returns:
        Stencil applied to v
    """
    out = np.empty(m * m, dtype=np.float64)
    for i in range(m):
        for j in range(m):
            idx = i * m + j
            acc = 4.0 * v[idx]
            if i > 0:
                acc -= v[idx - m]
            if i < m - 1:
                acc -= v[idx + m]
            if j > 0:
                acc -= v[idx - 1]
            if j < m - 1:
                acc -= v[idx + 1]
            out[idx] = acc
    return out


def dot(u: FloatArray, v: FloatArray) -> float:
    """Euclidean inner product of two vectors.

    Args:
        u: First vector
        v: Second vector

    Returns:
        uᵀv
    """
    if u.shape != v.shape:
        raise ValueError(f"Dimension mismatch: {u.shape} vs {v.shape}")
    return float(np.dot(u, v))


class LinearOperator(ABC):
    """Symmetric linear operator on R^n with diagonal access."""

    def __init__(self, dimension: int) -> None:
        if dimension <= 0:
            raise ValueError(f"Operator dimension must be positive, got {dimension}")
        self._dimension = dimension

    @property
    def dimension(self) -> int:
        """Dimension n of the underlying space."""
        return self._dimension

    @abstractmethod
    def _apply(self, v: FloatArray) -> FloatArray:
        """Matrix-vector product on a validated vector."""

    @abstractmethod
    def diagonal(self) -> FloatArray:
        """Return diag(A) as a new array."""

    def apply(self, v: FloatArray) -> FloatArray:
        """Compute Av.

        Args:
            v: Vector of length ``dimension``

        Returns:
            New vector Av
        """
        if v.shape != (self._dimension,):
            raise ValueError(f"Dimension mismatch: operator {self._dimension}, vector {v.shape}")
        return self._apply(v)

    def __matmul__(self, v: FloatArray) -> FloatArray:
        return self.apply(v)

    @cached_property
    def _dense(self) -> FloatArray:
        eye = np.eye(self._dimension)
        return np.column_stack([self._apply(eye[:, j]) for j in range(self._dimension)])

    def to_dense(self) -> FloatArray:
        """Assemble the operator as a dense matrix (copy)."""
        return self._dense.copy()

    @property
    def is_zero(self) -> bool:
        """Whether the operator is identically zero."""
        return False

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dimension={self._dimension})"


class DenseOperator(LinearOperator):
    """Operator backed by an explicit symmetric matrix."""

    def __init__(self, matrix: FloatArray | Sequence[Sequence[float]], rtol: float = 1e-12) -> None:
        arr = np.array(matrix, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"Matrix must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Matrix contains non-finite entries")
        scale = max(float(np.max(np.abs(arr))), 1.0)
        if np.max(np.abs(arr - arr.T)) > rtol * scale:
            raise ValueError("Matrix is not symmetric")
        super().__init__(arr.shape[0])
        self._matrix = arr

    def _apply(self, v: FloatArray) -> FloatArray:
        return self._matrix @ v

    def diagonal(self) -> FloatArray:
        return np.diag(self._matrix).copy()

    def to_dense(self) -> FloatArray:
        return self._matrix.copy()


class DiagonalOperator(LinearOperator):
    """Diagonal operator diag(d)."""

    def __init__(self, entries: FloatArray | Sequence[float]) -> None:
        values = as_vector(entries, "diagonal entries")
        super().__init__(values.shape[0])
        self._entries = values.copy()

    def _apply(self, v: FloatArray) -> FloatArray:
        return self._entries * v

    def diagonal(self) -> FloatArray:
        return self._entries.copy()


class ZeroOperator(LinearOperator):
    """The zero operator; used as S_k when no regularizer Hessian is given."""

    def _apply(self, v: FloatArray) -> FloatArray:
        return np.zeros_like(v)

    def diagonal(self) -> FloatArray:
        return np.zeros(self.dimension)

    @property
    def is_zero(self) -> bool:
        return True


class Laplacian2D(LinearOperator):
    """Matrix-free five-point negative Laplacian on an m x m interior grid.

    The stencil is unscaled (diagonal 4, neighbours -1); the grid spacing is
    absorbed into the regularization weight.
    """

    def __init__(self, m: int) -> None:
        if m < 1:
            raise ValueError(f"Grid size must be at least 1, got {m}")
        super().__init__(m * m)
        self.m = m

    def _apply(self, v: FloatArray) -> FloatArray:
        return _stencil_apply(np.ascontiguousarray(v), self.m)

    def diagonal(self) -> FloatArray:
        return np.full(self.dimension, 4.0)

    def __repr__(self) -> str:
        return f"Laplacian2D(m={self.m})"


class ScaledOperator(LinearOperator):
    """The operator c * A for a scalar c."""

    def __init__(self, coefficient: float, base: LinearOperator) -> None:
        super().__init__(base.dimension)
        self.coefficient = float(coefficient)
        self.base = base

    def _apply(self, v: FloatArray) -> FloatArray:
        return self.coefficient * self.base.apply(v)

    def diagonal(self) -> FloatArray:
        return self.coefficient * self.base.diagonal()

    @property
    def is_zero(self) -> bool:
        return self.coefficient == 0.0 or self.base.is_zero


class ShiftedOperator(LinearOperator):
    """The operator shift * I + A, i.e. the structured seed tau I + S."""

    def __init__(self, shift: float, base: LinearOperator) -> None:
        super().__init__(base.dimension)
        self.shift = float(shift)
        self.base = base

    def _apply(self, v: FloatArray) -> FloatArray:
        return self.shift * v + self.base.apply(v)

    def diagonal(self) -> FloatArray:
        return self.shift + self.base.diagonal()

    def to_dense(self) -> FloatArray:
        # the base assembly is cached, the shift is not
        return self.base.to_dense() + self.shift * np.eye(self.dimension)


def laplacian_2d(m: int) -> Laplacian2D:
    """Create the five-point Laplacian operator on an m x m grid.

    Args:
        m: Interior grid points per side (n = m²)

    Returns:
        Symmetric positive definite operator
    """
    return Laplacian2D(m)


def bfgs_update(matrix: FloatArray, s: FloatArray, y: FloatArray) -> FloatArray:
    """Apply one direct BFGS update B + yyᵀ/yᵀs - BssᵀB/sᵀBs."""
    rho = float(y @ s)
    if rho <= 0.0:
        raise ValueError(f"Curvature condition violated: yᵀs = {rho}")
    bs = matrix @ s
    sbs = float(s @ bs)
    assert sbs > 0.0, "sᵀBs must be positive for an SPD matrix"
    return matrix + np.outer(y, y) / rho - np.outer(bs, bs) / sbs


def dense_bfgs_oracle(
    seed: FloatArray, pairs: Sequence[tuple[FloatArray, FloatArray]]
) -> FloatArray:
    """Build the L-BFGS matrix densely from a seed and update pairs.

    Test oracle only; production code never materializes B_k.

    Args:
        seed: SPD seed matrix B⁽⁰⁾
        pairs: (s, y) pairs, oldest first (UpdatePair objects also work)

    Returns:
        B⁽ℓ⁾ from the recursion B⁽ʲ⁺¹⁾ = B⁽ʲ⁾ + U(s_j, y_j, B⁽ʲ⁾)
    """
    matrix = np.array(seed, dtype=np.float64)
    for s, y in pairs:
        matrix = bfgs_update(matrix, np.asarray(s, dtype=np.float64), np.asarray(y, dtype=np.float64))
    return matrix
