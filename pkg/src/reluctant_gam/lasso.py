"""L1-penalized GLM paths by cyclic coordinate descent with warm starts.

Gaussian responses are centered and solved directly; binomial and poisson
use iteratively reweighted least squares around the same coordinate-descent
core (the weighted problem is row-scaled by sqrt(w) and the intercept rides
along as an unpenalized column). Columns are centered always and scaled to
unit population sd unless standardize=False; coefficients are mapped back
to the original scale either way. Zero-variance columns are kept in the
coefficient matrix but never fitted (their coefficients are exactly 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import _kernels
from .data import Dataset, column_stats
from .errors import DataError, SolverError
from .families import Family

COEF_TOL = 1e-7       # per-sweep standardized coefficient-change tolerance
KKT_TOL = 1e-8        # stationarity tolerance (both scaled by lambda_max)
KKT_TOL_RELAXED = 5e-7  # accepted when stationarity progress stalls
MAX_PASSES = 100_000  # per-lambda sweep budget
MAX_IRLS = 25         # outer reweighting iterations per lambda
IRLS_TOL = 1e-7
WEIGHT_FLOOR = 1e-5
ETA_CLIP = 30.0       # link-scale clamp inside IRLS

DEFAULT_NLAMBDA = 100


@dataclass(frozen=True)
class LambdaPath:
    """Strictly decreasing, non-negative penalty levels.

    min_ratio is the build parameter of log-linearly spaced paths and None
    for explicitly constructed ones (e.g. ladders that end at 0).
    """

    values: np.ndarray
    min_ratio: float | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size < 1:
            raise DataError("lambda path must be a non-empty 1-d vector")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise DataError("lambda values must be finite and non-negative")
        if values.size > 1 and not np.all(np.diff(values) < 0):
            raise DataError("lambda values must be strictly decreasing")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return int(self.values.size)

    @property
    def lambda_max(self) -> float:
        return float(self.values[0])


def default_min_ratio(n: int, p: int) -> float:
    """Path floor ratio: 1e-2 when n < p, else 1e-4."""
    return 1e-2 if n < p else 1e-4


def _log_linear(lambda_max: float, nlambda: int, min_ratio: float) -> LambdaPath:
    if nlambda < 1:
        raise DataError("nlambda must be at least 1")
    if not 0.0 < min_ratio < 1.0:
        raise DataError("min_ratio must lie in (0, 1)")
    values = lambda_max * min_ratio ** np.linspace(0.0, 1.0, nlambda)
    return LambdaPath(values=values, min_ratio=float(min_ratio))


def make_lambda_path(
    x_std: np.ndarray,
    working_response: np.ndarray,
    nlambda: int = DEFAULT_NLAMBDA,
    min_ratio: float | None = None,
) -> LambdaPath:
    """Log-linear path from lambda_max = max_j |<x_j, working_response>| / n.

    x_std should be the standardized design and working_response the
    centered response (gaussian) or the null-model working residual.
    """
    x_std = np.asfortranarray(x_std, dtype=np.float64)
    working_response = np.ascontiguousarray(working_response, dtype=np.float64)
    n, p = x_std.shape
    if working_response.shape != (n,):
        raise DataError("working_response length must match the row count")
    grads = _kernels.column_gradients(x_std, working_response)
    lambda_max = float(np.max(np.abs(grads)))
    if lambda_max <= 0.0:
        raise DataError(
            "lambda_max is 0 (constant working response or all-zero columns)"
        )
    if min_ratio is None:
        min_ratio = default_min_ratio(n, p)
    return _log_linear(lambda_max, nlambda, min_ratio)


@dataclass(frozen=True)
class FittedLinearModel:
    """A penalized GLM path fit; coefficients are on the original data scale."""

    beta: np.ndarray        # (m, p)
    intercepts: np.ndarray  # (m,)
    path: LambdaPath
    family: Family
    null_deviance: float    # mean deviance of the intercept-only fit
    deviances: np.ndarray   # (m,) mean deviance along the path

    def __post_init__(self):
        for name in ("beta", "intercepts", "deviances"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def p(self) -> int:
        return int(self.beta.shape[1])

    def nonzero_counts(self) -> np.ndarray:
        """Number of nonzero coefficients at each path point."""
        return np.count_nonzero(self.beta, axis=1)


class _InternalDesign:
    """Centered (and optionally scaled) design shared by path building and fitting."""

    def __init__(self, x: np.ndarray, standardize: bool):
        self.means, safe_sds, self.zero_variance = column_stats(x)
        self.scales = safe_sds if standardize else np.ones_like(safe_sds)
        xi = (x - self.means) / self.scales
        xi[:, self.zero_variance] = 0.0
        self.xi = np.asfortranarray(xi)
        self.usable = (~self.zero_variance).astype(np.uint8)
        # unweighted column scale, used for IRLS tolerance scaling
        self.col_scale = np.sqrt(np.mean(self.xi**2, axis=0))


def _null_weighted_residual(d: Dataset):
    """Null-model working residual, row-scaled by sqrt of the IRLS weights.

    Returns (eta0, sqrtw, resid) with sqrtw None for gaussian. Pairing the
    sqrt(w)-scaled residual with the sqrt(w)-scaled design reproduces the
    score x_j' (y - mu0) / n that decides activation in the weighted problem.
    """
    family = d.family
    eta0 = family.null_eta(d.y)
    if family.name == "gaussian":
        return eta0, None, np.ascontiguousarray(d.y - np.mean(d.y))
    mu0 = family.inverse_link(np.full(d.n, eta0))
    w = np.maximum(family.variance(mu0), WEIGHT_FLOOR)
    z = eta0 + (d.y - mu0) / w
    sqrtw = np.sqrt(w)
    return eta0, sqrtw, np.ascontiguousarray(sqrtw * (z - eta0))


def default_lambda_path(
    d: Dataset,
    nlambda: int = DEFAULT_NLAMBDA,
    min_ratio: float | None = None,
    standardize: bool = True,
) -> LambdaPath:
    """Build the path from the data the way fit_lasso_path does internally."""
    design = _InternalDesign(d.x, standardize)
    _, sqrtw, resid = _null_weighted_residual(d)
    if sqrtw is None:
        xw = design.xi
    else:
        xw = np.empty(design.xi.shape, order="F")
        np.multiply(design.xi, sqrtw[:, np.newaxis], out=xw)
    grads = _kernels.column_gradients(xw, resid)
    lambda_max = float(np.max(np.abs(grads[design.usable.astype(bool)]), initial=0.0))
    if lambda_max <= 0.0:
        raise DataError(
            "lambda_max is 0 (constant working response or all-zero columns)"
        )
    if min_ratio is None:
        min_ratio = default_min_ratio(d.n, d.p)
    return _log_linear(lambda_max, nlambda, min_ratio)


def fit_lasso_path(
    d: Dataset,
    path: LambdaPath | None = None,
    penalty_mask: np.ndarray | None = None,
    standardize: bool = True,
    nlambda: int = DEFAULT_NLAMBDA,
    min_ratio: float | None = None,
) -> FittedLinearModel:
    """Fit the full penalized path with warm starts.

    penalty_mask marks which columns are penalized (default: all). Masked-out
    columns are fit without shrinkage. Raises SolverError when coordinate
    descent or IRLS fails to converge within its iteration caps.
    """
    family = d.family
    if path is None:
        path = default_lambda_path(
            d, nlambda=nlambda, min_ratio=min_ratio, standardize=standardize
        )
    if penalty_mask is None:
        pen = np.ones(d.p)
    else:
        penalty_mask = np.asarray(penalty_mask)
        if penalty_mask.shape != (d.p,):
            raise DataError("penalty_mask length must equal the feature count")
        pen = penalty_mask.astype(np.float64)

    design = _InternalDesign(d.x, standardize)
    scale_for_tol = max(path.lambda_max, np.finfo(float).tiny)
    coef_tol = COEF_TOL * scale_for_tol
    kkt_tol = KKT_TOL * scale_for_tol
    kkt_relaxed = KKT_TOL_RELAXED * scale_for_tol

    eta0 = family.null_eta(d.y)
    mu_null = family.inverse_link(np.full(d.n, eta0))
    null_deviance = float(np.mean(family.unit_deviance(d.y, mu_null)))

    if family.name == "gaussian":
        beta_int, intercept_int, deviances = _fit_gaussian_path(
            d, design, path, pen, coef_tol, kkt_tol, kkt_relaxed
        )
    else:
        beta_int, intercept_int, deviances = _fit_glm_path(
            d, design, path, pen, eta0, coef_tol, kkt_tol, kkt_relaxed,
            IRLS_TOL * scale_for_tol,
        )

    beta_out = beta_int / design.scales[np.newaxis, :]
    intercepts = intercept_int - beta_out @ design.means
    return FittedLinearModel(
        beta=beta_out,
        intercepts=intercepts,
        path=path,
        family=family,
        null_deviance=null_deviance,
        deviances=deviances,
    )


def _active_set_lambda(G, gfull, lam, pen, usable, beta, active, kkt_tol, max_active):
    """Exact working-set solve at one penalty level, in covariance mode.

    Alternates one covariance-mode sweep (which also settles the sign of a
    freshly added coordinate), an exact Cholesky solve on the working set
    with crossings dropped along the segment, and a full stationarity scan
    that admits the worst violator. Mutates beta/active in place. Returns
    False to request the plain coordinate-descent fallback (singular or
    oversized working set, or insufficient solve precision).
    """
    p = gfull.size
    for _ in range(3 * p + 20):
        idx = np.flatnonzero(active)
        if idx.size:
            _kernels.cov_sweep(G, gfull, lam, pen, idx, beta)
            keep = (beta[idx] != 0.0) | (pen[idx] == 0.0)
            if not keep.all():
                active[idx[~keep]] = False
                idx = idx[keep]
        if idx.size > max_active:
            return False
        for _ in range(idx.size + 5):
            if idx.size == 0:
                break
            s = np.sign(beta[idx])
            rhs = gfull[idx] - lam * pen[idx] * s
            try:
                fac = cho_factor(
                    G[np.ix_(idx, idx)], lower=True, check_finite=False
                )
            except np.linalg.LinAlgError:
                return False
            b = cho_solve(fac, rhs, check_finite=False)
            flip = (b * s <= 0.0) & (lam * pen[idx] > 0.0)
            if not flip.any():
                beta[idx] = b
                break
            cur = beta[idx]
            t_hit = cur[flip] / (cur[flip] - b[flip])
            t_star = float(t_hit.min())
            beta[idx] = cur + t_star * (b - cur)
            dropped = idx[np.flatnonzero(flip)[t_hit <= t_star]]
            beta[dropped] = 0.0
            active[dropped] = False
            idx = np.flatnonzero(active)
        else:
            return False

        idx = np.flatnonzero(active)
        grads = gfull - (G[:, idx] @ beta[idx]) if idx.size else gfull.copy()
        viol = np.where(
            active,
            np.where(pen > 0.0, np.abs(grads - lam * pen * np.sign(beta)), np.abs(grads)),
            np.maximum(0.0, np.abs(grads) - lam * pen),
        )
        viol[~usable] = 0.0
        worst_j = int(np.argmax(viol))
        if viol[worst_j] <= kkt_tol:
            return True
        if active[worst_j] or idx.size >= max_active:
            return False
        active[worst_j] = True
    return False


def _fit_gaussian_path(d, design, path, pen, coef_tol, kkt_tol, kkt_relaxed):
    n, p = design.xi.shape
    m = path.m
    ybar = float(np.mean(d.y))
    yc = np.ascontiguousarray(d.y - ybar)
    xi = design.xi
    gfull = _kernels.column_gradients(xi, yc)
    G = xi.T @ xi / n
    usable = design.usable.astype(bool)

    beta = np.zeros(p)
    active = usable & (pen == 0.0)
    max_active = min(n - 1, int(usable.sum()))
    denom = None  # built lazily, only the fallback needs it

    beta_int = np.zeros((m, p))
    deviances = np.zeros(m)
    for i, lam in enumerate(path.values):
        solved = _active_set_lambda(
            G, gfull, float(lam), pen, usable, beta, active, kkt_tol, max_active
        )
        if not solved:
            r = np.ascontiguousarray(yc - xi @ beta)
            if denom is None:
                denom = _kernels.column_sq_norms(xi)
            worst, _, converged = _kernels.cd_solve(
                xi, r, denom, float(lam), pen, design.usable, beta,
                coef_tol, kkt_tol, kkt_relaxed, MAX_PASSES,
            )
            if not converged:
                raise SolverError(
                    f"coordinate descent did not converge at lambda index {i} "
                    f"(worst stationarity violation {worst:.3e})"
                )
            active = (beta != 0.0) | (usable & (pen == 0.0))
        if not np.all(np.isfinite(beta)):
            raise SolverError(f"non-finite coefficients at lambda index {i}")
        beta_int[i] = beta
        idx = np.flatnonzero(beta)
        r = yc - xi[:, idx] @ beta[idx] if idx.size else yc
        deviances[i] = float(np.mean(r * r))
    intercept_int = np.full(m, ybar)
    return beta_int, intercept_int, deviances


def _fit_glm_path(
    d, design, path, pen, eta0, coef_tol, kkt_tol, kkt_relaxed, irls_tol
):
    family = d.family
    n, p = design.xi.shape
    m = path.m
    q = p + 1  # column 0 carries the intercept

    xfull = np.empty((n, q), order="F")
    xfull[:, 0] = 1.0
    xfull[:, 1:] = design.xi
    pen_full = np.concatenate(([0.0], pen))
    usable_full = np.concatenate(
        (np.ones(1, dtype=np.uint8), design.usable)
    ).astype(np.uint8)
    col_scale_full = np.concatenate(([1.0], design.col_scale))

    beta = np.zeros(q)
    beta[0] = eta0
    xt = np.empty((n, q), order="F")

    beta_int = np.zeros((m, p))
    intercept_int = np.zeros(m)
    deviances = np.zeros(m)

    for i, lam in enumerate(path.values):
        for _ in range(MAX_IRLS):
            eta = np.clip(xfull @ beta, -ETA_CLIP, ETA_CLIP)
            mu = family.inverse_link(eta)
            w = np.maximum(family.variance(mu), WEIGHT_FLOOR)
            sqrtw = np.sqrt(w)
            np.multiply(xfull, sqrtw[:, np.newaxis], out=xt)
            zt = sqrtw * (eta + (d.y - mu) / w)
            denom = _kernels.column_sq_norms(xt)
            r = np.ascontiguousarray(zt - xt @ beta)
            beta_prev = beta.copy()
            worst, passes, converged = _kernels.cd_solve(
                xt, r, denom, float(lam), pen_full, usable_full, beta,
                coef_tol, kkt_tol, kkt_relaxed, MAX_PASSES,
            )
            if not converged:
                raise SolverError(
                    f"coordinate descent did not converge at lambda index {i} "
                    f"(worst stationarity violation {worst:.3e})"
                )
            if not np.all(np.isfinite(beta)):
                raise SolverError(
                    f"IRLS produced non-finite coefficients at lambda index {i}"
                )
            delta = float(np.max(np.abs(beta - beta_prev) * col_scale_full))
            if delta < irls_tol:
                break
        eta_fit = xfull @ beta
        mu_fit = family.inverse_link(eta_fit)
        deviances[i] = float(np.mean(family.unit_deviance(d.y, mu_fit)))
        beta_int[i] = beta[1:]
        intercept_int[i] = beta[0]
    return beta_int, intercept_int, deviances


def predict_linear(
    model: FittedLinearModel,
    x_new: np.ndarray,
    lambda_index: int,
    scale: str = "link",
) -> np.ndarray:
    """Predictions at one path point, on the link or response scale."""
    x_new = np.asarray(x_new, dtype=np.float64)
    if x_new.ndim != 2 or x_new.shape[1] != model.p:
        raise DataError(
            f"x_new must have {model.p} columns, got shape {x_new.shape}"
        )
    if not 0 <= lambda_index < model.path.m:
        raise DataError(
            f"lambda_index {lambda_index} out of range [0, {model.path.m - 1}]"
        )
    eta = model.intercepts[lambda_index] + x_new @ model.beta[lambda_index]
    if scale == "link":
        return eta
    if scale == "response":
        return model.family.inverse_link(eta)
    raise DataError(f"scale must be 'link' or 'response', got {scale!r}")


def predict_linear_all(
    model: FittedLinearModel, x_new: np.ndarray, scale: str = "link"
) -> np.ndarray:
    """(n_new, m) prediction matrix over the whole path."""
    x_new = np.asarray(x_new, dtype=np.float64)
    if x_new.ndim != 2 or x_new.shape[1] != model.p:
        raise DataError(
            f"x_new must have {model.p} columns, got shape {x_new.shape}"
        )
    eta = model.intercepts[np.newaxis, :] + x_new @ model.beta.T
    if scale == "link":
        return eta
    if scale == "response":
        return model.family.inverse_link(eta)
    raise DataError(f"scale must be 'link' or 'response', got {scale!r}")
