"""Tests for vector helpers, operators and the dense BFGS oracle."""

import numpy as np
import pytest

from slbfgs.linalg import (
    DenseOperator,
    DiagonalOperator,
    Laplacian2D,
    ScaledOperator,
    ShiftedOperator,
    ZeroOperator,
    bfgs_update,
    dense_bfgs_oracle,
    dot,
    laplacian_2d,
)


def _kron_laplacian(m):
    t = 2.0 * np.eye(m) - np.eye(m, k=1) - np.eye(m, k=-1)
    return np.kron(np.eye(m), t) + np.kron(t, np.eye(m))


def test_dot():
    """Test the inner product and its dimension check."""
    assert dot(np.array([1.0, 2.0]), np.array([3.0, 4.0])) == 11.0

    with pytest.raises(ValueError):
        dot(np.ones(2), np.ones(3))


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_laplacian_matches_kronecker_form(m):
    """Test the stencil kernel against the Kronecker-sum Laplacian."""
    np.testing.assert_allclose(laplacian_2d(m).to_dense(), _kron_laplacian(m))


def test_laplacian_single_point():
    """Test the one-point grid."""
    np.testing.assert_array_equal(Laplacian2D(1).to_dense(), [[4.0]])


def test_laplacian_is_spd():
    """Test symmetry and positive definiteness of the assembled stencil."""
    dense = laplacian_2d(4).to_dense()
    np.testing.assert_array_equal(dense, dense.T)
    assert np.linalg.eigvalsh(dense).min() > 0.0
    np.testing.assert_array_equal(laplacian_2d(4).diagonal(), np.full(16, 4.0))


def test_laplacian_invalid_size():
    """Test that an empty grid raises ValueError."""
    with pytest.raises(ValueError):
        Laplacian2D(0)


def test_apply_dimension_mismatch():
    """Test that applying to a wrong-length vector raises ValueError."""
    with pytest.raises(ValueError, match="Dimension mismatch"):
        laplacian_2d(3).apply(np.ones(4))


def test_matmul_sugar():
    """Test that @ applies the operator."""
    op = DiagonalOperator([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(op @ np.ones(3), [1.0, 2.0, 3.0])


def test_dense_operator_validation():
    """Test that non-square and non-symmetric matrices are rejected."""
    with pytest.raises(ValueError, match="square"):
        DenseOperator(np.ones((2, 3)))

    with pytest.raises(ValueError, match="symmetric"):
        DenseOperator([[1.0, 2.0], [0.0, 1.0]])


def test_dense_operator_roundtrip():
    """Test apply, diagonal and to_dense of a dense operator."""
    matrix = np.array([[2.0, 1.0], [1.0, 3.0]])
    op = DenseOperator(matrix)
    np.testing.assert_allclose(op.apply(np.array([1.0, -1.0])), [1.0, -2.0])
    np.testing.assert_array_equal(op.diagonal(), [2.0, 3.0])
    np.testing.assert_array_equal(op.to_dense(), matrix)


def test_zero_and_scaled_operators():
    """Test the zero flag of zero and scaled operators."""
    assert ZeroOperator(3).is_zero
    assert ScaledOperator(0.0, laplacian_2d(2)).is_zero
    assert ScaledOperator(2.0, ZeroOperator(4)).is_zero
    assert not ScaledOperator(0.5, laplacian_2d(2)).is_zero

    scaled = ScaledOperator(0.5, laplacian_2d(2))
    np.testing.assert_allclose(scaled.to_dense(), 0.5 * _kron_laplacian(2))


def test_shifted_operator():
    """Test tau I + S in dense, diagonal and matrix-free form."""
    base = ScaledOperator(0.1, laplacian_2d(3))
    shifted = ShiftedOperator(2.0, base)
    expected = 2.0 * np.eye(9) + 0.1 * _kron_laplacian(3)
    v = np.arange(9.0)

    np.testing.assert_allclose(shifted.to_dense(), expected)
    np.testing.assert_allclose(shifted.diagonal(), np.diag(expected))
    np.testing.assert_allclose(shifted.apply(v), expected @ v)


def test_operator_rejects_empty_dimension():
    """Test that zero-dimensional operators raise ValueError."""
    with pytest.raises(ValueError):
        ZeroOperator(0)


def test_bfgs_update_satisfies_secant():
    """Test that one BFGS update maps s to y and stays symmetric."""
    rng = np.random.default_rng(0)
    a = rng.standard_normal((5, 5))
    spd = a @ a.T + 5.0 * np.eye(5)
    s = rng.standard_normal(5)
    y = spd @ s

    updated = bfgs_update(np.eye(5), s, y)

    np.testing.assert_allclose(updated @ s, y, rtol=1e-10)
    np.testing.assert_allclose(updated, updated.T, atol=1e-12)
    assert np.linalg.eigvalsh(updated).min() > 0.0


def test_bfgs_update_rejects_negative_curvature():
    """Test that yᵀs <= 0 raises ValueError."""
    with pytest.raises(ValueError, match="Curvature"):
        bfgs_update(np.eye(2), np.array([1.0, 0.0]), np.array([-1.0, 0.0]))


def test_dense_oracle_without_pairs_is_seed():
    """Test that an empty history returns the seed."""
    seed = np.diag([1.0, 2.0])
    np.testing.assert_array_equal(dense_bfgs_oracle(seed, []), seed)


def test_dense_oracle_small_example():
    """Test the oracle on seed 2I with s = (1, 0), y = (3, 1)."""
    s = np.array([1.0, 0.0])
    y = np.array([3.0, 1.0])

    matrix = dense_bfgs_oracle(2.0 * np.eye(2), [(s, y)])

    np.testing.assert_allclose(matrix @ s, y)
    np.testing.assert_allclose(matrix, [[3.0, 1.0], [1.0, 7.0 / 3.0]])


def test_dense_oracle_preserves_positive_definiteness():
    """Test that random SPD seeds and curvature pairs give SPD matrices."""
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(2, 11))
        a = rng.standard_normal((n, n))
        seed = a @ a.T + 0.1 * np.eye(n)
        pairs = []
        for _ in range(int(rng.integers(1, 6))):
            b = rng.standard_normal((n, n))
            s = rng.standard_normal(n)
            pairs.append((s, (b @ b.T + np.eye(n)) @ s))

        matrix = dense_bfgs_oracle(seed, pairs)

        np.testing.assert_allclose(matrix, matrix.T, atol=1e-8 * np.abs(matrix).max())
        assert np.linalg.eigvalsh(matrix).min() > 0.0
        s, y = pairs[-1]
        np.testing.assert_allclose(matrix @ s, y, rtol=1e-6, atol=1e-8 * np.linalg.norm(y))


def test_laplacian_smallest_eigenvalue():
    """Test the smallest eigenvalue 4 - 4cos(π/5) of the 4×4 grid stencil."""
    eigenvalues = np.linalg.eigvalsh(laplacian_2d(4).to_dense())

    assert eigenvalues.min() == pytest.approx(4.0 - 4.0 * np.cos(np.pi / 5.0), rel=1e-12)
    assert eigenvalues.min() == pytest.approx(0.7639, abs=1e-4)
