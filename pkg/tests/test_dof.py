import numpy as np
import pytest

from reluctant_gam.dof import (
    DofConfig,
    DofEstimate,
    estimate_df,
    fit_grand_mean,
    fit_identity,
    fit_ols,
    make_rgam_dof_fitter,
    make_smoother_fitter,
)
from reluctant_gam.errors import DataError, SolverError
from reluctant_gam.pipeline import RgamConfig


def make_design(seed=0, n=30, p=5):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    mu = x @ np.linspace(1.0, 2.0, p)
    return x, mu


def test_config_validation():
    mu = np.zeros(10)
    with pytest.raises(DataError):
        DofConfig(mu=np.zeros((2, 5)), sigma=1.0, B=10)
    with pytest.raises(DataError):
        DofConfig(mu=np.array([1.0, np.inf]), sigma=1.0, B=10)
    with pytest.raises(DataError):
        DofConfig(mu=mu, sigma=0.0, B=10)
    with pytest.raises(DataError):
        DofConfig(mu=mu, sigma=1.0, B=1)
    with pytest.raises(DataError):
        DofConfig(mu=mu, sigma=1.0, B=10, a=np.zeros(9))
    cfg = DofConfig(mu=mu, sigma=2.0, B=10)
    assert np.array_equal(cfg.a, np.zeros(10))
    with pytest.raises(ValueError):
        cfg.mu[0] = 1.0  # read-only


def test_ols_mean_identity_targets():
    x, mu = make_design(seed=1)
    n = x.shape[0]
    cfg = DofConfig(mu=mu, sigma=1.0, B=200, seed=5)
    # full-rank least squares with intercept has hat trace p + 1 = 6
    est = estimate_df(fit_ols, x, cfg)
    assert abs(est.df_hat - 6.0) < 2 * est.standard_error
    est_mean = estimate_df(fit_grand_mean, x, cfg)
    assert abs(est_mean.df_hat - 1.0) < 2 * est_mean.standard_error
    est_id = estimate_df(fit_identity, x, cfg)
    assert abs(est_id.df_hat - n) < 2 * est_id.standard_error
    assert est.B == 200 and est.replicate_values.shape == (200,)
    d = est.to_dict()
    assert d["df_hat"] == est.df_hat and d["B"] == 200


def test_projection_smoother_matches_trace():
    rng = np.random.default_rng(3)
    n, k = 40, 7
    q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    s = q @ q.T  # orthogonal projection, trace exactly k
    x = rng.standard_normal((n, 2))
    mu = rng.standard_normal(n)
    cfg = DofConfig(mu=mu, sigma=0.7, B=500, seed=11)
    est = estimate_df(make_smoother_fitter(s), x, cfg)
    assert abs(est.df_hat - k) < 3 * est.standard_error
    assert est.standard_error < 1.0


def test_offset_a_shifts_nothing_systematic():
    x, mu = make_design(seed=4)
    base = DofConfig(mu=mu, sigma=1.0, B=300, seed=9)
    shifted = DofConfig(mu=mu, sigma=1.0, B=300, seed=9, a=mu)
    e0 = estimate_df(fit_ols, x, base)
    e1 = estimate_df(fit_ols, x, shifted)
    joint = np.hypot(e0.standard_error, e1.standard_error)
    assert abs(e0.df_hat - e1.df_hat) < 3 * joint


def test_replicate_prefix_stable_when_B_grows():
    x, mu = make_design(seed=2)
    small = estimate_df(fit_ols, x, DofConfig(mu=mu, sigma=1.0, B=50, seed=7))
    big = estimate_df(fit_ols, x, DofConfig(mu=mu, sigma=1.0, B=80, seed=7))
    assert np.array_equal(small.replicate_values, big.replicate_values[:50])


def test_deterministic_given_seed():
    x, mu = make_design(seed=6)
    cfg = DofConfig(mu=mu, sigma=1.3, B=40, seed=21)
    e1 = estimate_df(fit_ols, x, cfg)
    e2 = estimate_df(fit_ols, x, cfg)
    assert np.array_equal(e1.replicate_values, e2.replicate_values)
    other = estimate_df(fit_ols, x, DofConfig(mu=mu, sigma=1.3, B=40, seed=22))
    assert not np.array_equal(e1.replicate_values, other.replicate_values)


def test_error_paths():
    x, mu = make_design(seed=8)
    cfg = DofConfig(mu=mu, sigma=1.0, B=5, seed=1)
    with pytest.raises(DataError, match="rows"):
        estimate_df(fit_ols, x[:-1], cfg)

    def bad_shape(x, y, rng=None):
        return y[:-1]

    with pytest.raises(DataError, match="replicate 0"):
        estimate_df(bad_shape, x, cfg)

    def blows_up(x, y, rng=None):
        raise ValueError("boom")

    with pytest.raises(SolverError, match="replicate 0"):
        estimate_df(blows_up, x, cfg)

    def data_error(x, y, rng=None):
        raise DataError("bad column")

    # library errors keep their type, gaining the replicate index
    with pytest.raises(DataError, match="replicate 0: bad column"):
        estimate_df(data_error, x, cfg)
    with pytest.raises(DataError, match="square"):
        make_smoother_fitter(np.zeros((3, 2)))


def test_rgam_fitter_smoke_and_underdetermined():
    rng = np.random.default_rng(13)
    n, p = 120, 4
    x = rng.uniform(-1, 1, size=(n, p))
    mu = x[:, 0] + np.sin(2 * x[:, 1])
    y = mu + 0.4 * rng.standard_normal(n)
    fitter = make_rgam_dof_fitter(RgamConfig(init_nz="none"))
    fitted = fitter(x, y, np.random.default_rng(0))
    assert fitted.shape == (n,)
    assert np.mean((fitted - y) ** 2) < np.var(y)
    # too few rows for the unpenalized refit: error carries the replicate
    tight = rng.uniform(-1, 1, size=(10, 8))  # 2 * 8 + 1 columns > 10 rows
    cfg = DofConfig(mu=np.zeros(10), sigma=1.0, B=2, seed=3)
    with pytest.raises(DataError, match="replicate 0"):
        estimate_df(make_rgam_dof_fitter(RgamConfig(init_nz="all")), tight, cfg)


def test_estimate_fields_consistent():
    x, mu = make_design(seed=10, n=25, p=3)
    est = estimate_df(fit_ols, x, DofConfig(mu=mu, sigma=0.9, B=60, seed=2))
    assert est.df_hat == pytest.approx(float(np.mean(est.replicate_values)))
    assert est.standard_error == pytest.approx(
        float(np.std(est.replicate_values, ddof=1) / np.sqrt(60))
    )
    assert isinstance(est, DofEstimate)
