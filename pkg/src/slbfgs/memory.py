"""Update-pair storage and the two-loop recursion.

The two-loop recursion applies H_k = B_k⁻¹ to a vector. The seed is applied
in the middle of the recursion, either as a scaled identity (classical
L-BFGS) or as a solve with the structured seed tau I + S.
"""

import logging
from collections import deque
from collections.abc import Iterator
from dataclasses import dataclass
from enum import Enum

import numpy as np

from slbfgs.linalg import LinearOperator, ShiftedOperator
from slbfgs.minres import SolveStats, pminres
from slbfgs.utils import FloatArray

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class UpdatePair:
    """One (s, y) correction with cached inner products."""

    s: FloatArray
    y: FloatArray
    rho: float
    s_norm_sq: float

    @classmethod
    def from_vectors(cls, s: FloatArray, y: FloatArray) -> "UpdatePair":
        """Create a pair, caching yᵀs and ‖s‖²."""
        return cls(s.copy(), y.copy(), float(np.dot(y, s)), float(np.dot(s, s)))

    def __iter__(self) -> Iterator[FloatArray]:
        yield self.s
        yield self.y


class Memory:
    """Bounded FIFO storage of update pairs, oldest first.

    A capacity of None means unbounded storage.
    """

    def __init__(self, capacity: int | None = 5) -> None:
        if capacity is not None and capacity < 0:
            raise ValueError(f"Memory capacity must be non-negative, got {capacity}")
        self.capacity = capacity
        self._pairs: deque[UpdatePair] = deque()

    def __len__(self) -> int:
        return len(self._pairs)

    def __iter__(self) -> Iterator[UpdatePair]:
        return iter(self._pairs)

    @property
    def pairs(self) -> tuple[UpdatePair, ...]:
        """Stored pairs, oldest first."""
        return tuple(self._pairs)

    def try_store(self, s: FloatArray, y: FloatArray, c_s: float) -> bool:
        """Store (s, y) if yᵀs > c_s ‖s‖², evicting the oldest pair when full.

        ``c_s = 0`` gives the classical rule yᵀs > 0.

        Args:
            s: Step
            y: Gradient difference
            c_s: Cautious threshold

        Returns:
            Whether the pair passed the curvature test
        """
        pair = UpdatePair.from_vectors(s, y)
        if pair.s_norm_sq == 0.0:
            raise ValueError("Cannot store a pair with s = 0")
        if c_s < 0.0:
            raise ValueError(f"c_s must be non-negative, got {c_s}")
        if not pair.rho > c_s * pair.s_norm_sq:
            return False
        self._pairs.append(pair)
        if self.capacity is not None:
            while len(self._pairs) > self.capacity:
                self._pairs.popleft()
        return True


def try_store(mem: Memory, s: FloatArray, y: FloatArray, c_s: float) -> tuple[bool, Memory]:
    """Functional form of :meth:`Memory.try_store`; returns the updated memory."""
    return mem.try_store(s, y, c_s), mem


class SeedMode(str, Enum):
    """How the seed H⁽⁰⁾ is applied inside the two-loop recursion."""

    IDENTITY = "identity"
    STRUCTURED = "structured"


@dataclass(frozen=True)
class InnerSolverConfig:
    """Early-stopping parameters for the inner MINRES solve."""

    maxiter: int = 50
    tol: float = 1e-2

    def __post_init__(self) -> None:
        if self.maxiter < 1:
            raise ValueError(f"maxiter must be at least 1, got {self.maxiter}")
        if self.tol <= 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")


@dataclass(frozen=True)
class SeedApplier:
    """Applies the inverse seed r = (B⁽⁰⁾)⁻¹ q.

    In identity mode ``tau`` is the inverse-seed factor tau_hat (r = tau_hat q).
    In structured mode B⁽⁰⁾ = tau I + S; the system is solved exactly when
    ``inner`` is None, otherwise with Jacobi-preconditioned MINRES.
    """

    mode: SeedMode
    tau: float
    operator: LinearOperator | None = None
    inner: InnerSolverConfig | None = None

    def __post_init__(self) -> None:
        if not self.tau > 0.0:
            raise ValueError(f"Seed scaling must be positive, got {self.tau}")
        if self.mode is SeedMode.STRUCTURED and self.operator is None:
            raise ValueError("Structured seed needs an operator S")

    @classmethod
    def identity(cls, tau_hat: float) -> "SeedApplier":
        """Classical seed H⁽⁰⁾ = tau_hat I."""
        return cls(SeedMode.IDENTITY, tau_hat)

    @classmethod
    def structured(
        cls, tau: float, operator: LinearOperator, inner: InnerSolverConfig | None = None
    ) -> "SeedApplier":
        """Structured seed B⁽⁰⁾ = tau I + S."""
        return cls(SeedMode.STRUCTURED, tau, operator, inner)

    @property
    def _regularizer(self) -> LinearOperator:
        assert self.operator is not None
        return self.operator

    def diagonal(self, n: int) -> FloatArray:
        """Diagonal of B⁽⁰⁾."""
        if self.mode is SeedMode.IDENTITY:
            return np.full(n, 1.0 / self.tau)
        return self.tau + self._regularizer.diagonal()

    def solve(
        self, q: FloatArray, inner: InnerSolverConfig | None = None
    ) -> tuple[FloatArray, SolveStats | None]:
        """Compute r = (B⁽⁰⁾)⁻¹ q.

        Args:
            q: Vector from the first loop
            inner: Override of the inner solver settings

        Returns:
            (r, stats) where stats is None for closed-form or exact solves
        """
        if self.mode is SeedMode.IDENTITY:
            return self.tau * q, None
        regularizer = self._regularizer
        if regularizer.is_zero:
            return q / self.tau, None
        inner = inner or self.inner
        seed_op = ShiftedOperator(self.tau, regularizer)
        if inner is None:
            return np.linalg.solve(seed_op.to_dense(), q), None
        r, stats = pminres(seed_op, q, maxiter=inner.maxiter, tol=inner.tol)
        if not stats.converged:
            logger.warning(
                "Inner solve stopped at relative residual %.3e after %d iterations",
                stats.relative_residual,
                stats.iterations,
            )
        return r, stats


def two_loop(
    grad: FloatArray,
    mem: Memory,
    seed: SeedApplier,
    inner: InnerSolverConfig | None = None,
) -> tuple[FloatArray, SolveStats | None]:
    """Compute the quasi-Newton direction d = -H_k grad.

    Args:
        grad: Gradient at the current iterate
        mem: Stored pairs (all with yᵀs > 0)
        seed: Seed applier
        inner: Optional override of the seed's inner solver settings

    Returns:
        (d, stats of the seed solve)
    """
    q = grad.copy()
    pairs = mem.pairs
    alphas = np.empty(len(pairs))
    for i in range(len(pairs) - 1, -1, -1):
        pair = pairs[i]
        alphas[i] = float(np.dot(pair.s, q)) / pair.rho
        q -= alphas[i] * pair.y

    r, stats = seed.solve(q, inner)
    r = np.array(r, dtype=np.float64)
    for i, pair in enumerate(pairs):
        beta = float(np.dot(pair.y, r)) / pair.rho
        r += (alphas[i] - beta) * pair.s
    return -r, stats
