import numpy as np
import pytest

from reluctant_gam.errors import DataError
from reluctant_gam.spline import (
    evaluate_spline,
    fit_smoothing_spline,
    solve_df_to_lambda,
)


def dense_smoother(knots, weights, lam):
    """Reference smoother built from the dense penalty matrix.

    K = Q R^{-1} Q^T with the standard second-difference Q and the
    overlap matrix R of the natural cubic basis; the smoother is
    (W + lam K)^{-1} W. Slow but independent of the banded code.
    """
    k = knots.size
    h = np.diff(knots)
    q = np.zeros((k, k - 2))
    r = np.zeros((k - 2, k - 2))
    for i in range(1, k - 1):
        q[i - 1, i - 1] = 1.0 / h[i - 1]
        q[i, i - 1] = -(1.0 / h[i - 1] + 1.0 / h[i])
        q[i + 1, i - 1] = 1.0 / h[i]
        r[i - 1, i - 1] = (h[i - 1] + h[i]) / 3.0
        if i < k - 2:
            r[i - 1, i] = r[i, i - 1] = h[i] / 6.0
    kmat = q @ np.linalg.solve(r, q.T)
    w = np.diag(weights)
    return np.linalg.solve(w + lam * kmat, w)


def test_matches_dense_reference():
    rng = np.random.default_rng(0)
    x = np.sort(rng.uniform(-1, 1, size=25))
    r = np.sin(3 * x) + 0.1 * rng.standard_normal(25)
    for lam in (1e-4, 1e-2, 1.0):
        fit = fit_smoothing_spline(x, r, smoothing_parameter=lam)
        s = dense_smoother(x, np.ones(25), lam)
        # the dense reference is itself ill-conditioned at tiny penalties
        assert np.max(np.abs(fit.fitted - s @ r)) < 1e-8
        assert fit.effective_df == pytest.approx(np.trace(s), abs=1e-8)


def test_ties_collapse_to_weighted_means():
    # duplicated x values act as one knot with weight = multiplicity
    x = np.array([0.0, 0.0, 1.0, 2.0, 2.0, 2.0, 3.0])
    r = np.array([1.0, 3.0, 0.5, 2.0, 1.0, 0.0, -1.0])
    lam = 0.3
    fit = fit_smoothing_spline(x, r, smoothing_parameter=lam)
    knots = np.array([0.0, 1.0, 2.0, 3.0])
    weights = np.array([2.0, 1.0, 3.0, 1.0])
    rbar = np.array([2.0, 0.5, 1.0, -1.0])
    s = dense_smoother(knots, weights, lam)
    g = s @ rbar
    assert np.max(np.abs(fit.values - g)) < 1e-10
    # fitted expands back to the original (tied) positions
    assert np.max(np.abs(fit.fitted - g[[0, 0, 1, 2, 2, 2, 3]])) < 1e-10


def test_df2_equals_least_squares_line():
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 5, size=40)
    r = 2.0 - 0.7 * x + rng.standard_normal(40)
    fit = fit_smoothing_spline(x, r, target_df=2.0)
    slope, intercept = np.polyfit(x, r, 1)
    assert np.max(np.abs(fit.fitted - (intercept + slope * x))) < 1e-6
    assert fit.effective_df == 2.0
    assert fit.smoothing_parameter == np.inf
    # evaluation far outside the data stays on the same line
    far = evaluate_spline(fit, np.array([-100.0, 100.0]))
    assert np.allclose(far, intercept + slope * np.array([-100.0, 100.0]), atol=1e-6)


def test_linear_data_reproduced_exactly():
    # a line has zero roughness, so any penalty leaves it untouched
    rng = np.random.default_rng(2)
    x = np.sort(rng.uniform(-2, 2, size=30))
    r = 1.5 + 0.25 * x
    for df in (3.0, 5.0):
        fit = fit_smoothing_spline(x, r, target_df=df)
        assert np.max(np.abs(fit.fitted - r)) < 1e-8


def test_zero_penalty_interpolates():
    rng = np.random.default_rng(3)
    x = np.sort(rng.uniform(0, 1, size=12))
    r = rng.standard_normal(12)
    fit = fit_smoothing_spline(x, r, smoothing_parameter=0.0)
    assert np.max(np.abs(fit.fitted - r)) < 1e-9
    assert fit.effective_df == pytest.approx(12.0, abs=1e-8)
    # df = number of unique knots requests the interpolant as well
    fit2 = fit_smoothing_spline(x, r, target_df=12.0)
    assert np.max(np.abs(fit2.fitted - r)) < 1e-9


def test_df_calibration_and_monotonicity():
    rng = np.random.default_rng(4)
    x = np.sort(rng.uniform(-1, 1, size=50))
    r = rng.standard_normal(50)
    dfs = [2.5, 4.0, 8.0, 20.0]
    lams = []
    for df in dfs:
        fit = fit_smoothing_spline(x, r, target_df=df)
        assert fit.effective_df == pytest.approx(df, abs=1e-3)
        lams.append(fit.smoothing_parameter)
    # more flexibility means less penalty
    assert all(a > b for a, b in zip(lams, lams[1:]))


def test_smoother_trace_matches_requested_df():
    rng = np.random.default_rng(5)
    x = np.sort(rng.uniform(0, 1, size=30))
    lam = solve_df_to_lambda(x, 5.0)
    basis = np.eye(30)
    trace = 0.0
    for i in range(30):
        trace += fit_smoothing_spline(x, basis[i], smoothing_parameter=lam).fitted[i]
    assert trace == pytest.approx(5.0, abs=1e-3)


def test_natural_boundary_extrapolation():
    rng = np.random.default_rng(6)
    x = np.sort(rng.uniform(0, 1, size=15))
    r = np.cos(4 * x)
    fit = fit_smoothing_spline(x, r, target_df=6.0)
    assert fit.second_derivs[0] == 0.0
    assert fit.second_derivs[-1] == 0.0
    # beyond the boundary knots the curve continues as a straight line
    left = evaluate_spline(fit, np.array([x[0] - 1.0, x[0] - 2.0]))
    slope_left = left[0] - fit.values[0]
    assert left[1] - left[0] == pytest.approx(slope_left, rel=1e-10)
    inside = evaluate_spline(fit, x)
    assert np.max(np.abs(inside - fit.values)) < 1e-10


def test_input_validation():
    x = np.array([0.0, 1.0, 2.0, 3.0])
    r = np.array([1.0, 0.0, 1.0, 2.0])
    with pytest.raises(DataError):
        fit_smoothing_spline(x, r)  # neither df nor penalty given
    with pytest.raises(DataError):
        fit_smoothing_spline(x, r, target_df=3.0, smoothing_parameter=1.0)
    with pytest.raises(DataError):
        fit_smoothing_spline(x, r, target_df=1.5)  # below the line
    with pytest.raises(DataError):
        fit_smoothing_spline(x, r, target_df=9.0)  # above unique count
    with pytest.raises(DataError):
        fit_smoothing_spline(np.array([0.0, 0.0, 1.0]), r[:3], target_df=2.5)
    with pytest.raises(DataError):
        fit_smoothing_spline(x, r, smoothing_parameter=-1.0)
