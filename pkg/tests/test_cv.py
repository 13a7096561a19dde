import numpy as np
import pytest

from reluctant_gam.cv import (
    LassoFitter,
    auc,
    binomial_deviance,
    cross_validate,
    fit_cv,
    make_folds,
    mean_deviance,
    mean_squared_error,
    resolve_metric,
)
from reluctant_gam.data import Dataset
from reluctant_gam.errors import DataError
from reluctant_gam.families import GAUSSIAN
from reluctant_gam.lasso import fit_lasso_path, predict_linear_all


def test_basic_metrics():
    y = np.array([1.0, 2.0, 3.0])
    mu = np.array([1.5, 2.0, 2.0])
    assert mean_squared_error(y, mu) == pytest.approx((0.25 + 0.0 + 1.0) / 3)
    # gaussian deviance is the mse
    assert mean_deviance(y, mu, GAUSSIAN) == mean_squared_error(y, mu)
    with pytest.raises(DataError):
        resolve_metric("accuracy")


def test_binomial_deviance_hand_value():
    labels = np.array([0.0, 1.0, 1.0, 0.0])
    prob = np.full(4, 0.5)
    assert binomial_deviance(prob, labels) == pytest.approx(2.0 * np.log(2.0))
    # clamping keeps a confident wrong prediction finite
    assert np.isfinite(binomial_deviance(np.array([1.0]), np.array([0.0])))


def test_auc_hand_values():
    labels = np.array([0.0, 0.0, 1.0, 1.0])
    # one inversion among the four positive-negative pairs
    assert auc(np.array([0.1, 0.4, 0.35, 0.8]), labels) == pytest.approx(0.75)
    assert auc(np.array([0.1, 0.2, 0.3, 0.4]), labels) == 1.0
    assert auc(np.array([0.4, 0.3, 0.2, 0.1]), labels) == 0.0
    # all scores tied: every pair counts half
    assert auc(np.ones(4), labels) == pytest.approx(0.5)
    with pytest.raises(DataError):
        auc(np.array([0.1, 0.2]), np.array([1.0, 1.0]))


def test_make_folds_balanced_and_deterministic():
    rng = np.random.default_rng(0)
    folds = make_folds(23, 5, rng)
    counts = np.bincount(folds, minlength=5)
    assert counts.max() - counts.min() <= 1
    assert counts.sum() == 23
    folds2 = make_folds(23, 5, np.random.default_rng(0))
    assert np.array_equal(folds, folds2)
    with pytest.raises(DataError):
        make_folds(10, 1, rng)
    with pytest.raises(DataError):
        make_folds(4, 5, rng)


def test_make_folds_stratified():
    rng = np.random.default_rng(1)
    labels = np.array([0.0] * 30 + [1.0] * 10)
    folds = make_folds(40, 5, rng, stratify_labels=labels)
    for k in range(5):
        sel = folds == k
        assert np.sum(labels[sel]) == 2  # 10 positives spread 2 per fold
        assert np.sum(sel) == 8
    with pytest.raises(DataError):
        make_folds(6, 3, rng, stratify_labels=np.array([0, 0, 0, 0, 0, 1.0]))


def test_loo_cv_matches_brute_force():
    rng = np.random.default_rng(2)
    n, p = 18, 4
    x = rng.standard_normal((n, p))
    y = x[:, 0] + 0.5 * rng.standard_normal(n)
    d = Dataset(x=x, y=y, family="gaussian")
    fitter = LassoFitter(nlambda=20)
    model, res = fit_cv(d, fitter=fitter, k=n, metric="mse", rng=np.random.default_rng(3))
    # brute force: refit without each point, score it on the shared path
    path = model.path
    total = np.zeros((n, path.m))
    for i in range(n):
        keep = np.array([j for j in range(n) if j != i])
        sub = fit_lasso_path(d.subset(keep), path=path)
        pred = predict_linear_all(sub, x[i : i + 1])
        total[i] = (pred[0] - y[i]) ** 2
    fold_order = np.argsort(res.fold_assignments)  # fold f holds one point
    expect_mean = total.mean(axis=0)
    assert np.max(np.abs(res.mean_metric - expect_mean)) < 1e-12
    assert fold_order.size == n


def test_fit_cv_gaussian_sanity():
    rng = np.random.default_rng(4)
    n, p = 60, 30
    x = rng.standard_normal((n, p))
    y = x[:, 0] - 2 * x[:, 1] + 0.5 * rng.standard_normal(n)
    d = Dataset(x=x, y=y, family="gaussian")
    model, res = fit_cv(d, k=5, rng=np.random.default_rng(5))
    assert res.metric_name == "deviance"
    assert res.k == 5
    assert res.lambdas.shape == res.mean_metric.shape == res.se_metric.shape
    assert np.all(res.se_metric >= 0)
    # the sparsest model within one se cannot be denser than the optimum
    assert res.lambda_1se_index <= res.lambda_min_index
    assert res.lambda_1se >= res.lambda_min
    # signal data: cv picks something better than the null end of the path
    assert res.mean_metric[res.lambda_min_index] < res.mean_metric[0]
    # nonzero counts come from the full-data fit
    assert np.array_equal(res.nonzero_linear, model.nonzero_counts())
    assert np.all(res.nonzero_nonlinear == 0)
    header, rows = res.csv_rows()
    assert header == ["lambda", "mean_metric", "se_metric",
                      "nonzero_linear", "nonzero_nonlinear"]
    assert len(rows) == res.lambdas.size


def test_fit_cv_deterministic_given_rng():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((40, 10))
    y = x[:, 0] + rng.standard_normal(40)
    d = Dataset(x=x, y=y, family="gaussian")
    _, r1 = fit_cv(d, k=4, rng=123)
    _, r2 = fit_cv(d, k=4, rng=123)
    assert np.array_equal(r1.fold_assignments, r2.fold_assignments)
    assert np.array_equal(r1.mean_metric, r2.mean_metric)


def test_fit_cv_binomial_stratified_auc():
    rng = np.random.default_rng(7)
    n, p = 80, 10
    x = rng.standard_normal((n, p))
    eta = 1.5 * x[:, 0]
    y = (rng.uniform(size=n) < 1 / (1 + np.exp(-eta))).astype(float)
    d = Dataset(x=x, y=y, family="binomial")
    model, res = fit_cv(d, k=5, metric="auc", rng=np.random.default_rng(8))
    # stratification balances the positives across folds
    for k in range(5):
        share = y[res.fold_assignments == k].sum()
        assert abs(share - y.sum() / 5) <= 1.0
    # auc is maximized, so the chosen mean beats the path start
    assert res.mean_metric[res.lambda_min_index] >= res.mean_metric[0]
    assert res.mean_metric[res.lambda_min_index] > 0.6


def test_cross_validate_wrapper():
    rng = np.random.default_rng(9)
    x = rng.standard_normal((30, 5))
    y = x[:, 0] + rng.standard_normal(30)
    d = Dataset(x=x, y=y, family="gaussian")
    res = cross_validate(d, k=3, rng=10)
    assert res.k == 3
