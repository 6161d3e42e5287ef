"""Tests for the benchmark harness and its CSV outputs."""

import csv
import io
import math
from dataclasses import replace

import numpy as np
import pytest

from slbfgs.analysis import performance_profile
from slbfgs.bench import (
    SUMMARY_HEADER,
    TRACE_HEADER,
    TraceRow,
    profile_from_directory,
    profile_from_outcomes,
    read_trace_csv,
    run_suite,
    run_sweep,
    write_profile_csv,
    write_trace,
    write_trace_csv,
)
from slbfgs.config import SweepSpec
from slbfgs.optimizer import OptimizerConfig, Strategy, slbfgs_minimize
from slbfgs.problems import make_quadratic

SMALL = SweepSpec(
    strategies=(Strategy.HY, Strategy.BS, Strategy.ADAP),
    memories=(3,),
    alphas=(1e-1,),
    m=2,
)


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


def test_trace_header():
    """Test the column order of trace files."""
    stream = io.StringIO()
    write_trace([], stream)

    assert stream.getvalue() == ",".join(TRACE_HEADER) + "\n"
    assert TRACE_HEADER[:3] == ("k", "J", "grad_norm")
    assert len(TRACE_HEADER) == 13


def test_trace_csv_roundtrip(tmp_path):
    """Test that a written trace reads back to the same rows."""
    problem = make_quadratic(2, 1e-1)
    cfg = OptimizerConfig(seed_strategy=Strategy.BU, memory=3, inner=None)
    result = slbfgs_minimize(problem, problem.x0, cfg)
    path = tmp_path / "trace.csv"
    write_trace_csv(result.trace, path)

    rows = read_trace_csv(path)
    assert rows == [TraceRow.from_record(r) for r in result.trace]
    assert rows[-1].alpha is None
    assert rows[0].pair_accepted is True
    assert rows[0].rho_sign == 1


def test_read_trace_rejects_other_files(tmp_path):
    """Test that a file without the trace header raises ValueError."""
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n", encoding="utf-8")

    with pytest.raises(ValueError, match="trace header"):
        read_trace_csv(path)


def test_trace_row_validation():
    """Test malformed trace rows."""
    with pytest.raises(ValueError, match="cells"):
        TraceRow.from_strings(["0", "1.0"])

    with pytest.raises(ValueError, match="missing"):
        TraceRow.from_strings(["0", "", "1.0"] + [""] * 10)


def test_run_sweep_order_and_outcomes():
    """Test that outcomes follow sweep order and converge."""
    outcomes = run_sweep(SMALL)

    assert [o.run for o in outcomes] == list(SMALL.runs())
    for outcome in outcomes:
        assert outcome.result.status.converged
        assert outcome.metric("iters") == outcome.result.iterations
        assert outcome.wall_time >= 0.0
    with pytest.raises(ValueError, match="metric"):
        outcomes[0].metric("memory")


def test_parallel_sweep_matches_serial():
    """Test that worker threads do not change results."""
    serial = run_sweep(SMALL)
    parallel = run_sweep(replace(SMALL, workers=3))

    for a, b in zip(serial, parallel, strict=True):
        assert a.run == b.run
        assert a.summary_row() == b.summary_row()


def test_profile_from_outcomes():
    """Test one problem row per (memory, alpha) instance."""
    outcomes = run_sweep(SweepSpec(strategies=(Strategy.HS, Strategy.BS), memories=(3, 5), alphas=(1e-1,), m=2))
    table = profile_from_outcomes(outcomes, "iters")

    assert table.methods == ("hs", "bs")
    assert table.problems == ("l3_a0.1", "l5_a0.1")
    assert table.curves[-1].tolist() == [1.0, 1.0]


def test_run_suite_outputs(tmp_path):
    """Test the files written by a sweep."""
    status = run_suite(SMALL, tmp_path)

    assert status == 0
    summary = _read_rows(tmp_path / "summary.csv")
    assert tuple(summary[0]) == SUMMARY_HEADER
    assert [row[0] for row in summary[1:]] == ["hy", "bs", "adap"]
    assert all(row[3] == "converged_grad" for row in summary[1:])
    assert sorted(p.name for p in (tmp_path / "traces").iterdir()) == [
        "adap_l3_a0.1.csv",
        "bs_l3_a0.1.csv",
        "hy_l3_a0.1.csv",
    ]
    for metric in ("iters", "fevals", "time"):
        profile = _read_rows(tmp_path / f"profile_{metric}.csv")
        assert profile[0] == ["tau", "hy", "bs", "adap"]
        assert [float(v) for v in profile[-1][1:]] == [1.0, 1.0, 1.0]
    assert len(_read_rows(tmp_path / "timings.csv")) == 4


def test_run_suite_is_deterministic(tmp_path):
    """Test byte-identical summaries and traces across repeated sweeps."""
    run_suite(SMALL, tmp_path / "a")
    run_suite(SMALL, tmp_path / "b")

    assert (tmp_path / "a" / "summary.csv").read_bytes() == (tmp_path / "b" / "summary.csv").read_bytes()
    for trace in (tmp_path / "a" / "traces").iterdir():
        assert trace.read_bytes() == (tmp_path / "b" / "traces" / trace.name).read_bytes()


def test_run_suite_empty_sweep(tmp_path):
    """Test that an empty sweep succeeds without writing files."""
    out = tmp_path / "out"

    assert run_suite(SweepSpec(strategies=()), out) == 0
    assert not out.exists()


def test_run_suite_reports_failures(tmp_path):
    """Test exit status 1 when a run hits max_iter."""
    spec = SweepSpec(strategies=(Strategy.BS,), memories=(3,), alphas=(1e-5,), m=3, max_iter=2)

    assert run_suite(spec, tmp_path) == 1
    summary = _read_rows(tmp_path / "summary.csv")
    assert summary[1][3] == "max_iter"
    # the only instance failed, so no profile is written
    assert not (tmp_path / "profile_iters.csv").exists()


@pytest.mark.parametrize("metric", ["iters", "fevals", "time"])
def test_profile_from_directory(tmp_path, metric):
    """Test that a saved sweep reproduces the in-memory profile."""
    spec = SweepSpec(strategies=(Strategy.HY, Strategy.BG), memories=(3, 5), alphas=(1e-1,), m=2)
    run_suite(spec, tmp_path)

    table = profile_from_directory(tmp_path, metric)
    assert table.methods == ("hy", "bg")
    assert table.problems == ("l3_a0.1", "l5_a0.1")
    if metric != "time":
        expected = profile_from_outcomes(run_sweep(spec), metric)
        np.testing.assert_array_equal(table.ratios, expected.ratios)


def test_profile_from_directory_unknown_metric(tmp_path):
    """Test that an unknown metric raises ValueError."""
    with pytest.raises(ValueError, match="metric"):
        profile_from_directory(tmp_path, "memory")


def test_write_profile_csv(tmp_path):
    """Test the tau column and one column per method."""
    path = tmp_path / "profile.csv"
    write_profile_csv(performance_profile([[1.0, 2.0], [1.0, math.inf]], methods=["a", "b"]), path)

    assert _read_rows(path) == [["tau", "a", "b"], ["1", "1", "0"], ["2", "1", "0.5"]]
