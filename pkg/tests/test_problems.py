"""Tests for the benchmark problems."""

import numpy as np
import pytest

from slbfgs.linalg import laplacian_2d
from slbfgs.problems import make_nonconvex, make_quadratic


def _fd_gradient(f, x, h=1e-6):
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (f(x + e) - f(x - e)) / (2 * h)
    return grad


def test_quadratic_optimum():
    """Test J(x*) = 0, grad J(x*) = 0 and the value at x0."""
    problem = make_quadratic(3, 1e-3)

    assert problem.dimension == 9
    assert problem.evaluate(problem.x_star) == 0.0
    np.testing.assert_array_equal(problem.gradient(problem.x_star), np.zeros(9))
    hessian = problem.dense_hessian(problem.x0)
    assert problem.evaluate(problem.x0) == pytest.approx(0.5 * np.sum(hessian))


def test_quadratic_hessian_structure():
    """Test D + alpha S with D_jj = exp(-j)."""
    problem = make_quadratic(2, 1e-1)
    expected = np.diag(np.exp(-np.arange(1.0, 5.0))) + 1e-1 * laplacian_2d(2).to_dense()

    np.testing.assert_allclose(problem.dense_hessian(problem.x0), expected, rtol=1e-15)
    np.testing.assert_allclose(
        problem.regularizer_hessian(problem.x0).to_dense(), 1e-1 * laplacian_2d(2).to_dense(), rtol=1e-15
    )


def test_quadratic_dense_hessian_is_a_copy():
    """Test that callers cannot corrupt the problem's Hessian."""
    problem = make_quadratic(2, 1e-1)
    problem.dense_hessian(problem.x0)[0, 0] = 100.0

    assert problem.dense_hessian(problem.x0)[0, 0] < 2.0


@pytest.mark.parametrize("make", [lambda: make_quadratic(3, 1e-1), lambda: make_nonconvex(3, seed=4)])
def test_gradient_finite_differences(make):
    """Test analytic gradients against central differences."""
    problem = make()
    rng = np.random.default_rng(11)
    for _ in range(20):
        x = rng.uniform(-2.0, 2.0, problem.dimension)
        fd = _fd_gradient(problem.evaluate, x)
        assert np.linalg.norm(problem.gradient(x) - fd) <= 1e-5 * max(1.0, np.linalg.norm(fd))


@pytest.mark.parametrize("make", [lambda: make_quadratic(3, 1e-3), lambda: make_nonconvex(3, seed=2)])
def test_data_gradient_plus_regularizer(make):
    """Test grad J = grad D + S x for a quadratic regularizer."""
    problem = make()
    rng = np.random.default_rng(5)
    for _ in range(10):
        x = rng.standard_normal(problem.dimension)
        # both regularizers vanish at x*
        reg_grad = problem.regularizer_hessian(x).apply(x - problem.x_star)
        np.testing.assert_allclose(
            problem.data_gradient(x) + reg_grad, problem.gradient(x), rtol=1e-12, atol=1e-12
        )


def test_shortcut_gradient_difference():
    """Test that z from data gradients equals y - S s."""
    problem = make_quadratic(4, 1e-1)
    rng = np.random.default_rng(3)
    reg = problem.regularizer_hessian(problem.x0)
    for _ in range(10):
        x, x_new = rng.standard_normal((2, problem.dimension))
        z_short = problem.data_gradient(x_new) - problem.data_gradient(x)
        z_full = problem.gradient(x_new) - problem.gradient(x) - reg.apply(x_new - x)
        assert np.linalg.norm(z_short - z_full) <= 1e-12 * max(1.0, np.linalg.norm(z_full))


def test_nonconvex_minimizer_and_start():
    """Test x* = 0 and a start point just below π."""
    problem = make_nonconvex(4, seed=1)

    assert problem.evaluate(problem.x_star) == 0.0
    np.testing.assert_array_equal(problem.gradient(problem.x_star), np.zeros(16))
    assert np.all((problem.x0 >= np.pi - 0.6) & (problem.x0 <= np.pi - 0.1))
    assert problem.evaluate(problem.x0) > 0.0


def test_nonconvex_is_reproducible():
    """Test that the seed fixes the coupling term and the start point."""
    a = make_nonconvex(3, seed=7)
    b = make_nonconvex(3, seed=7)
    c = make_nonconvex(3, seed=8)
    x = np.linspace(-1.0, 1.0, 9)

    np.testing.assert_array_equal(a.x0, b.x0)
    assert a.evaluate(x) == b.evaluate(x)
    assert not np.array_equal(a.x0, c.x0)


def test_nonconvex_has_negative_curvature():
    """Test an indefinite Hessian at a point far from x*."""
    problem = make_nonconvex(3, alpha=1e-2, seed=0)
    x = np.full(9, np.pi)

    eigenvalues = np.linalg.eigvalsh(problem.dense_hessian(x))
    assert eigenvalues.min() < 0.0


@pytest.mark.parametrize("seed", range(5))
def test_nonconvex_start_is_concave(seed):
    """Test a negative definite Hessian at the start point."""
    problem = make_nonconvex(4, seed=seed)

    assert np.linalg.eigvalsh(problem.dense_hessian(problem.x0)).max() < 0.0


def test_nonconvex_hessian_matches_gradient():
    """Test the dense Hessian against differences of the gradient."""
    problem = make_nonconvex(3, seed=3)
    x = np.random.default_rng(0).uniform(-2.0, 2.0, 9)
    h = 1e-6
    fd = np.column_stack(
        [(problem.gradient(x + h * e) - problem.gradient(x - h * e)) / (2 * h) for e in np.eye(9)]
    )

    np.testing.assert_allclose(problem.dense_hessian(x), fd, atol=1e-6)


def test_problem_validation():
    """Test that invalid sizes and weights raise ValueError."""
    with pytest.raises(ValueError):
        make_quadratic(0)

    with pytest.raises(ValueError):
        make_quadratic(2, alpha=0.0)

    with pytest.raises(ValueError):
        make_nonconvex(0)

    with pytest.raises(ValueError):
        make_nonconvex(2, gamma=-1.0)
