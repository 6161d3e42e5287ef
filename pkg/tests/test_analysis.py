"""Tests for performance profiles, Newton diagnostics and rate estimates."""

import math

import numpy as np
import pytest

from slbfgs.analysis import (
    estimate_rate,
    newton_diagnostics,
    performance_profile,
    with_newton_columns,
)
from slbfgs.optimizer import IterationRecord, OptimizerConfig, Strategy, minimize, slbfgs_minimize
from slbfgs.problems import make_quadratic


def test_profile_single_method():
    """Test that a lone method is always best."""
    table = performance_profile([[3.0], [7.0]])

    np.testing.assert_array_equal(table.taus, [1.0])
    np.testing.assert_array_equal(table.curves, [[1.0]])
    assert table.methods == ("m0",)


def test_profile_two_methods():
    """Test a symmetric two-method table."""
    table = performance_profile([[1.0, 2.0], [2.0, 1.0]], methods=["a", "b"])

    np.testing.assert_array_equal(table.taus, [1.0, 2.0])
    np.testing.assert_array_equal(table.curves, [[0.5, 0.5], [1.0, 1.0]])
    assert table.rho("a", 1.5) == 0.5


def test_profile_failures():
    """Test that an infinite entry never counts as solved."""
    table = performance_profile([[1.0, math.inf], [4.0, 2.0]], methods=["a", "b"], taus=[1.0, 2.0, 100.0])

    np.testing.assert_array_equal(table.curves[:, 0], [0.5, 1.0, 1.0])
    np.testing.assert_array_equal(table.curves[:, 1], [0.5, 0.5, 0.5])


def test_profile_curves_are_monotone():
    """Test that rho_s is non-decreasing in tau and bounded by 1."""
    rng = np.random.default_rng(0)
    times = rng.uniform(1.0, 100.0, size=(12, 4))
    times[rng.random((12, 4)) < 0.2] = math.inf
    times[:, 0] = np.minimum(times[:, 0], 50.0)
    table = performance_profile(times)

    assert np.all(np.diff(table.curves, axis=0) >= 0.0)
    assert np.all((table.curves >= 0.0) & (table.curves <= 1.0))
    assert table.curves.shape == (table.taus.size, 4)
    # at tau = 1 every problem has at least one winner
    assert table.curves[0].sum() >= 1.0


def test_profile_validation():
    """Test that malformed tables raise ValueError."""
    with pytest.raises(ValueError, match="shape"):
        performance_profile([1.0, 2.0])

    with pytest.raises(ValueError, match="positive"):
        performance_profile([[0.0, 1.0]])

    with pytest.raises(ValueError, match="positive"):
        performance_profile([[math.nan, 1.0]])

    with pytest.raises(ValueError, match="failed"):
        performance_profile([[math.inf, math.inf]])

    with pytest.raises(ValueError, match="Names"):
        performance_profile([[1.0, 2.0]], methods=["a"])

    with pytest.raises(ValueError, match="tau"):
        performance_profile([[1.0, 2.0]], taus=[0.5, 2.0])


def test_newton_diagnostics_quadratic():
    """Test cosines and ratios against d_N = x* - x_k on a quadratic."""
    problem = make_quadratic(3, 1e-1)
    cfg = OptimizerConfig(seed_strategy=Strategy.BS, keep_iterates=True, max_iter=20)
    result = slbfgs_minimize(problem, problem.x0, cfg)
    diag = newton_diagnostics(problem, result.trace)

    steps = [r for r in result.trace if r.d is not None]
    assert len(diag.ks) == len(steps)
    for record, cosine, ratio in zip(steps, diag.cosines, diag.ratios):
        d_newton = problem.x_star - record.x
        expected = record.d @ d_newton / (np.linalg.norm(record.d) * np.linalg.norm(d_newton))
        assert cosine == pytest.approx(expected, rel=1e-8, abs=1e-8)
        assert ratio == pytest.approx(np.linalg.norm(record.d) / np.linalg.norm(d_newton), rel=1e-8)
    assert -1.0 <= diag.median_cosine <= 1.0
    assert diag.median_cosine > 0.0


def test_with_newton_columns():
    """Test that diagnostics land in the matching records only."""
    problem = make_quadratic(2, 1e-1)
    result = slbfgs_minimize(problem, problem.x0, OptimizerConfig(keep_iterates=True, max_iter=5))
    diag = newton_diagnostics(problem, result.trace)
    filled = with_newton_columns(result.trace, diag)

    assert len(filled) == len(result.trace)
    assert filled[0].cos_newton == diag.cosines[0]
    assert filled[-1].cos_newton is None
    assert result.trace[0].cos_newton is None


def test_newton_diagnostics_needs_hessian_and_iterates():
    """Test the error cases of the Newton comparison."""
    problem = make_quadratic(2, 1e-1)
    record = IterationRecord(0, 1.0, 1.0, alpha=1.0, d=np.ones(4))

    with pytest.raises(ValueError, match="no iterate"):
        newton_diagnostics(problem, [record])


def test_rate_of_geometric_sequence():
    """Test q = r = 0.5 on J_k = 0.5^k."""
    trace = [IterationRecord(k, 0.5**k, 0.5**k) for k in range(40)]
    rate = estimate_rate(trace, 0.0)

    assert rate.q_factor == pytest.approx(0.5, rel=1e-10)
    assert rate.r_factor_grad == pytest.approx(0.5, rel=1e-10)
    assert rate.r_factor_x is None
    assert rate.tail_length == 20


def test_rate_requires_decrease_and_length():
    """Test that stalled or short traces raise ValueError."""
    flat = [IterationRecord(k, 1.0, 1.0) for k in range(40)]
    with pytest.raises(ValueError, match="decrease"):
        estimate_rate(flat, 0.0)

    short = [IterationRecord(k, 0.5**k, 1.0) for k in range(6)]
    with pytest.raises(ValueError, match="tail"):
        estimate_rate(short, 0.0)

    with pytest.raises(ValueError):
        estimate_rate(flat, 0.0, tail_fraction=0.0)


def test_rate_on_quadratic_run():
    """Test linear convergence of a structured run on the quadratic."""
    problem = make_quadratic(4, 1e-3)
    cfg = OptimizerConfig(seed_strategy=Strategy.BS, memory=3, keep_iterates=True)
    result = slbfgs_minimize(problem, problem.x0, cfg)
    rate = estimate_rate(result.trace, 0.0, problem.x_star)

    assert result.status.converged
    assert rate.q_factor < 1.0
    assert rate.r_factor_grad < 1.0
    assert rate.r_factor_x is not None and rate.r_factor_x < 1.0


def test_structured_directions_closer_to_newton():
    """Test that structured seeds beat Hs and Hy on the median Newton cosine at alpha = 1e-1."""
    problem = make_quadratic(4, 1e-1)

    def median_cosine(strategy):
        cfg = OptimizerConfig(memory=5, seed_strategy=strategy, keep_iterates=True)
        result = minimize(problem, problem.x0, cfg)
        assert result.status.converged
        return newton_diagnostics(problem, result.trace).median_cosine

    structured = [median_cosine(s) for s in (Strategy.BS, Strategy.BU, Strategy.BG, Strategy.ADAP)]
    classical = [median_cosine(s) for s in (Strategy.HS, Strategy.HY)]

    assert min(structured) > max(classical)
    assert all(c <= 1.0 for c in structured + classical)
