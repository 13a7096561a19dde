"""Cubic smoothing splines with a degrees-of-freedom target.

The fit minimizes sum_k w_k (rbar_k - f(u_k))^2 + lam * integral f''(t)^2 dt
over natural cubic splines, where u are the unique sorted x values, w the
tie counts, and rbar the per-knot mean responses. The banded Reinsch system
keeps everything O(n), including the exact trace of the smoother matrix
used to invert a degrees-of-freedom target into a penalty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DataError, SolverError

# Penalty bracket and stopping rule for the df -> lambda inversion.
LAMBDA_LO = 1e-10
LAMBDA_HI = 1e10
TRACE_TOL = 1e-6
MAX_BISECT = 100

MIN_UNIQUE = 4  # fewer unique x values than this is degenerate


@dataclass(frozen=True)
class SmoothingSplineFit:
    """A fitted natural cubic smoothing spline.

    knots/values/second_derivs define the curve (second derivatives are zero
    at both boundary knots); fitted holds the fit at the original, possibly
    tied, inputs. smoothing_parameter is inf for the straight-line limit.
    """

    knots: np.ndarray
    values: np.ndarray
    second_derivs: np.ndarray
    smoothing_parameter: float
    effective_df: float
    fitted: np.ndarray

    def __post_init__(self):
        for name in ("knots", "values", "second_derivs", "fitted"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def _collapse_ties(x: np.ndarray, r: np.ndarray):
    """Unique sorted knots, per-knot weighted-mean response, tie counts, inverse map."""
    knots, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    sums = np.zeros(knots.size)
    np.add.at(sums, inverse, r)
    rbar = sums / counts
    return knots, rbar, counts.astype(np.float64), inverse


def _validate_inputs(x: np.ndarray, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if x.ndim != 1 or r.ndim != 1:
        raise DataError("x and r must be 1-d vectors")
    if x.size != r.size:
        raise DataError(f"x has {x.size} values but r has {r.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(r))):
        raise DataError("spline inputs contain non-finite values")
    return x, r


def _line_fit(knots, rbar, weights):
    """Weighted least-squares line through the knot summaries."""
    wsum = weights.sum()
    xbar = float(np.dot(weights, knots) / wsum)
    ybar = float(np.dot(weights, rbar) / wsum)
    sxx = float(np.dot(weights, (knots - xbar) ** 2))
    if sxx <= 0.0:
        raise DataError("cannot fit a line through a single distinct x value")
    slope = float(np.dot(weights, (knots - xbar) * (rbar - ybar)) / sxx)
    values = ybar + slope * (knots - xbar)
    return values


def solve_df_to_lambda(x: np.ndarray, target_df: float) -> float:
    """Invert a degrees-of-freedom target into a smoothing penalty.

    The trace of the smoother matrix decreases monotonically in the penalty,
    so a log-scale bisection over [1e-10, 1e10] finds the penalty whose
    trace is within TRACE_TOL of target_df. target_df must lie strictly
    between 2 and the number of unique x values.
    """
    x = np.asarray(x, dtype=np.float64)
    knots, counts = np.unique(x, return_counts=True)
    k = knots.size
    if k < MIN_UNIQUE:
        raise DataError(f"need at least {MIN_UNIQUE} unique x values, got {k}")
    if not (2.0 < target_df < k):
        raise DataError(
            f"target df must lie strictly between 2 and {k} (unique values), "
            f"got {target_df}"
        )
    h = np.diff(knots)
    winv = 1.0 / counts.astype(np.float64)

    lo, hi = LAMBDA_LO, LAMBDA_HI
    tr_lo = _kernels.spline_trace(h, winv, lo)
    tr_hi = _kernels.spline_trace(h, winv, hi)
    if tr_lo < 0.0 or tr_hi < 0.0:
        raise SolverError("spline system was not positive definite")
    if abs(tr_lo - target_df) <= TRACE_TOL:
        return lo
    if abs(tr_hi - target_df) <= TRACE_TOL:
        return hi
    if not (tr_hi < target_df < tr_lo):
        raise SolverError(
            f"df target {target_df} outside the reachable range "
            f"[{tr_hi:.4f}, {tr_lo:.4f}] for the bracket [{LAMBDA_LO}, {LAMBDA_HI}]"
        )
    log_lo, log_hi = np.log(lo), np.log(hi)
    for _ in range(MAX_BISECT):
        log_mid = 0.5 * (log_lo + log_hi)
        lam = float(np.exp(log_mid))
        tr = _kernels.spline_trace(h, winv, lam)
        if tr < 0.0:
            raise SolverError("spline system was not positive definite")
        if abs(tr - target_df) <= TRACE_TOL:
            return lam
        if tr > target_df:
            log_lo = log_mid  # trace too high -> need more penalty
        else:
            log_hi = log_mid
    raise SolverError(
        f"df -> penalty bisection did not reach tolerance {TRACE_TOL} "
        f"within {MAX_BISECT} steps"
    )


def fit_smoothing_spline(
    x: np.ndarray,
    r: np.ndarray,
    target_df: float | None = None,
    smoothing_parameter: float | None = None,
) -> SmoothingSplineFit:
    """Fit a natural cubic smoothing spline to (x, r).

    Exactly one of target_df / smoothing_parameter must be given. Ties in x
    are collapsed to weighted knot means. target_df = 2 gives the weighted
    least-squares line; target_df equal to the number of unique values (or
    smoothing_parameter = 0) gives the natural interpolating spline.
    """
    x, r = _validate_inputs(x, r)
    if (target_df is None) == (smoothing_parameter is None):
        raise DataError("give exactly one of target_df or smoothing_parameter")
    knots, rbar, counts, inverse = _collapse_ties(x, r)
    k = knots.size
    if k < MIN_UNIQUE:
        raise DataError(f"need at least {MIN_UNIQUE} unique x values, got {k}")

    if target_df is not None:
        if target_df < 2.0 or target_df > k:
            raise DataError(
                f"target df must lie in [2, {k} (unique values)], got {target_df}"
            )
        if target_df == 2.0:
            return _finish_line(knots, rbar, counts, inverse)
        if target_df == k:
            lam = 0.0
        else:
            lam = solve_df_to_lambda(x, target_df)
    else:
        lam = float(smoothing_parameter)
        if lam < 0.0:
            raise DataError("smoothing_parameter must be non-negative")
        if not np.isfinite(lam):
            return _finish_line(knots, rbar, counts, inverse)

    h = np.diff(knots)
    winv = 1.0 / counts
    g, gamma, edf, ok = _kernels.spline_solve(h, winv, rbar, lam)
    if not ok:
        raise SolverError("spline system was not positive definite")
    second = np.zeros(k)
    second[1:-1] = gamma  # natural boundary: zero curvature at both ends
    return SmoothingSplineFit(
        knots=knots,
        values=g,
        second_derivs=second,
        smoothing_parameter=lam,
        effective_df=float(edf),
        fitted=g[inverse],
    )


def _finish_line(knots, rbar, counts, inverse) -> SmoothingSplineFit:
    values = _line_fit(knots, rbar, counts)
    return SmoothingSplineFit(
        knots=knots,
        values=values,
        second_derivs=np.zeros(knots.size),
        smoothing_parameter=float("inf"),
        effective_df=2.0,
        fitted=values[inverse],
    )


def evaluate_spline(fit: SmoothingSplineFit, x_new: np.ndarray) -> np.ndarray:
    """Evaluate a fitted spline, extrapolating linearly beyond the knots."""
    x_new = np.asarray(x_new, dtype=np.float64)
    if x_new.ndim != 1:
        raise DataError("x_new must be a 1-d vector")
    if not np.all(np.isfinite(x_new)):
        raise DataError("x_new contains non-finite values")
    u = fit.knots
    g = fit.values
    m2 = fit.second_derivs
    k = u.size
    out = np.empty(x_new.size)

    left = x_new < u[0]
    right = x_new > u[-1]
    inside = ~(left | right)

    idx = np.clip(np.searchsorted(u, x_new[inside], side="right") - 1, 0, k - 2)
    h = u[idx + 1] - u[idx]
    a = (u[idx + 1] - x_new[inside]) / h
    b = 1.0 - a
    out[inside] = (
        a * g[idx]
        + b * g[idx + 1]
        + (a**3 - a) * h**2 / 6.0 * m2[idx]
        + (b**3 - b) * h**2 / 6.0 * m2[idx + 1]
    )

    if np.any(left):
        h0 = u[1] - u[0]
        slope = (g[1] - g[0]) / h0 - h0 * m2[1] / 6.0  # f'(u_0); m2[0] = 0
        out[left] = g[0] + slope * (x_new[left] - u[0])
    if np.any(right):
        h1 = u[-1] - u[-2]
        slope = (g[-1] - g[-2]) / h1 + h1 * m2[-2] / 6.0  # f'(u_K); m2[-1] = 0
        out[right] = g[-1] + slope * (x_new[right] - u[-1])
    return out
