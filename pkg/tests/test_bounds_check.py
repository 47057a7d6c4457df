import dataclasses

import numpy as np
import pytest

from clubcascade.bounds_check import (
    BoundsCheckConfig,
    CheckRow,
    all_passed,
    check_bernstein,
    check_det,
    check_ellipsoid,
    check_gamma_quotient,
    check_lambda_min,
    check_log_dominance,
    check_self_norm,
    ellipsoid_violation,
    format_table,
    gamma_side_conditions,
    run_suites,
)

SMALL = BoundsCheckConfig(det_trials=40, self_norm_trials=40, lambda_min_trials=10,
                          lambda_min_horizon=2000, bernstein_trials=200, log_dominance_trials=200,
                          gamma_trials=200, ellipsoid_trials=20, ellipsoid_horizon=1000)

SUITES = [check_det, check_self_norm, check_log_dominance, check_gamma_quotient]


def test_zero_config_is_empty_pass():
    rows = run_suites(BoundsCheckConfig.zero())
    assert rows == [] and all_passed(rows)
    assert format_table(rows).splitlines() == [
        "check,trials,violations,allowed,verdict,worst_empirical,bound", "overall,0,0,,pass,,"]


def test_small_suite_passes():
    rows = run_suites(SMALL)
    assert [r.name for r in rows] == ["det_upper_bound", "self_norm_sum_bound", "lambda_min_lower",
                                      "bernstein_rounds", "log_dominance_threshold",
                                      "gamma_confidence_threshold", "confidence_ellipsoid"]
    for r in rows:
        assert r.passed, r
        assert np.isfinite(r.worst_empirical) and np.isfinite(r.bound_at_worst)


def test_inverted_bounds_fail():
    rows = run_suites(SMALL, invert=True)
    assert not all_passed(rows)
    assert all(r.verdict == "fail" for r in rows)


@pytest.mark.parametrize("suite", SUITES)
def test_deterministic_inequalities_have_no_budget(suite):
    row = suite(30, np.random.default_rng(1))
    assert row.allowed == 0 and row.violations == 0


def test_budgets_for_probabilistic_checks():
    assert check_lambda_min(20, np.random.default_rng(0), horizon=500, delta=0.1).allowed == 2
    assert check_bernstein(1000, np.random.default_rng(0)).allowed == 50
    assert check_ellipsoid(30, np.random.default_rng(0), horizon=200).allowed == 3


def test_same_seed_same_table():
    a, b = run_suites(SMALL), run_suites(SMALL)
    assert format_table(a) == format_table(b)
    c = run_suites(dataclasses.replace(SMALL, seed=1))
    assert format_table(a) != format_table(c)


def test_skipping_a_suite_keeps_other_streams():
    full = run_suites(SMALL)
    partial = run_suites(dataclasses.replace(SMALL, det_trials=0))
    assert partial == full[1:]


def test_gamma_side_conditions():
    assert gamma_side_conditions(42465.5, 5, 1.0, 0.5, 10, 0.01, 1.0)
    # a huge ridge parameter breaks the first condition
    assert not gamma_side_conditions(100.0, 2, 1.0, 0.5, 10, 0.01, 1e4)


def test_ellipsoid_single_trajectory():
    violated, norm, radius = ellipsoid_violation(np.random.default_rng(0), 500)
    assert norm >= 0 and radius > 0 and violated == (norm > radius)


def test_row_verdict():
    assert CheckRow("x", 10, 1, 1, 0.0, 1.0).verdict == "pass"
    assert CheckRow("x", 10, 2, 1, 0.0, 1.0).verdict == "fail"
