"""K-fold cross-validation over a shared penalty path.

The path is built once from the full data and reused verbatim in every
fold, so per-lambda scores are comparable across folds. Any model that can
be fit at a fixed path and produce an (n, m) response-scale prediction
matrix plugs in through the fitter protocol (see LassoFitter for the
reference implementation). Fitters that re-run internal machinery, like
the additive-model pipeline with its own inner CV, are re-run in full
inside each fold: slower, but no information leaks from held-out rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DataError
from .lasso import (
    LambdaPath,
    fit_lasso_path,
    predict_linear_all,
)

DEFAULT_FOLDS = 5
PROB_CLAMP = 1e-10


def mean_squared_error(y: np.ndarray, mu: np.ndarray) -> float:
    return float(np.mean((np.asarray(y) - np.asarray(mu)) ** 2))


def mean_deviance(y: np.ndarray, mu: np.ndarray, family) -> float:
    return float(np.mean(family.unit_deviance(np.asarray(y), np.asarray(mu))))


def binomial_deviance(prob: np.ndarray, labels: np.ndarray) -> float:
    """-2 mean log-likelihood of 0/1 labels under clamped probabilities."""
    prob = np.clip(np.asarray(prob, dtype=np.float64), PROB_CLAMP, 1.0 - PROB_CLAMP)
    labels = np.asarray(labels, dtype=np.float64)
    if prob.shape != labels.shape or prob.ndim != 1:
        raise DataError("binomial_deviance expects matching 1-d vectors")
    return float(-2.0 * np.mean(labels * np.log(prob) + (1.0 - labels) * np.log1p(-prob)))


def auc(scores: np.ndarray, labels: np.ndarray) -> np.float64 | float:
    """Area under the ROC curve by the rank (Mann-Whitney) formula.

    The probability that a random positive outranks a random negative,
    with score ties counted 1/2 (average ranks). Requires both classes.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise DataError("auc expects matching 1-d score and label vectors")
    pos = labels == 1.0
    n_pos = int(np.count_nonzero(pos))
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("auc is undefined when only one class is present")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(labels.size)
    ranks[order] = np.arange(1, labels.size + 1, dtype=np.float64)
    # average ranks within tied score groups
    sorted_scores = scores[order]
    i = 0
    while i < labels.size:
        j = i
        while j + 1 < labels.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        if j > i:
            ranks[order[i : j + 1]] = 0.5 * (i + 1 + j + 1)
        i = j + 1
    u = float(np.sum(ranks[pos])) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def _metric_deviance(y, mu, family):
    return mean_deviance(y, mu, family)


def _metric_mse(y, mu, family):
    return mean_squared_error(y, mu)


def _metric_auc(y, mu, family):
    if family.name != "binomial":
        raise DataError("the auc metric requires a binomial response")
    return auc(mu, y)


# name -> (callable(y, mu, family), higher_is_better)
METRICS = {
    "deviance": (_metric_deviance, False),
    "mse": (_metric_mse, False),
    "auc": (_metric_auc, True),
}


def resolve_metric(name: str):
    try:
        return METRICS[name]
    except KeyError:
        raise DataError(
            f"unknown metric {name!r}; choose from {sorted(METRICS)}"
        ) from None


def make_folds(
    n: int,
    k: int,
    rng: np.random.Generator,
    stratify_labels: np.ndarray | None = None,
) -> np.ndarray:
    """Fold id (0..k-1) per row; fold sizes differ by at most 1.

    Unstratified: a random permutation dealt round-robin. Stratified: each
    label class is shuffled and dealt into the same round-robin sequence so
    class proportions stay balanced across folds; every class needs at
    least 2 members so no training split can lose a class entirely.
    """
    if not 2 <= k <= n:
        raise DataError(f"fold count must satisfy 2 <= k <= n, got k={k}, n={n}")
    fold_ids = np.empty(n, dtype=np.int64)
    if stratify_labels is None:
        perm = rng.permutation(n)
        fold_ids[perm] = np.arange(n) % k
        return fold_ids
    labels = np.asarray(stratify_labels)
    if labels.shape != (n,):
        raise DataError("stratify labels must have one entry per row")
    counter = 0
    for value in np.unique(labels):
        members = np.flatnonzero(labels == value)
        if members.size < 2:
            raise DataError(
                f"stratified folds need at least 2 rows per class; "
                f"class {value!r} has {members.size}"
            )
        members = rng.permutation(members)
        for row in members:
            fold_ids[row] = counter % k
            counter += 1
    return fold_ids


@dataclass(frozen=True)
class CvResult:
    """Per-lambda cross-validated scores and the two standard selections.

    lambda_min_index marks the best mean score (max for auc, min
    otherwise); lambda_1se_index the smallest index (largest lambda,
    sparsest fit) whose mean is within one standard error of the best.
    nonzero_linear / nonzero_nonlinear count the full-data model's
    selected components at each lambda.
    """

    metric_name: str
    lambdas: np.ndarray           # (m,)
    mean_metric: np.ndarray       # (m,)
    se_metric: np.ndarray         # (m,)
    fold_metrics: np.ndarray      # (k, m)
    fold_assignments: np.ndarray  # (n,)
    lambda_min_index: int
    lambda_1se_index: int
    nonzero_linear: np.ndarray    # (m,)
    nonzero_nonlinear: np.ndarray  # (m,)

    def __post_init__(self):
        for name in (
            "lambdas", "mean_metric", "se_metric", "fold_metrics",
            "fold_assignments", "nonzero_linear", "nonzero_nonlinear",
        ):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def k(self) -> int:
        return int(self.fold_metrics.shape[0])

    @property
    def lambda_min(self) -> float:
        return float(self.lambdas[self.lambda_min_index])

    @property
    def lambda_1se(self) -> float:
        return float(self.lambdas[self.lambda_1se_index])

    def to_dict(self) -> dict:
        return {
            "metric_name": self.metric_name,
            "k": self.k,
            "lambdas": self.lambdas.tolist(),
            "mean_metric": self.mean_metric.tolist(),
            "se_metric": self.se_metric.tolist(),
            "lambda_min_index": int(self.lambda_min_index),
            "lambda_1se_index": int(self.lambda_1se_index),
            "lambda_min": self.lambda_min,
            "lambda_1se": self.lambda_1se,
            "nonzero_linear": self.nonzero_linear.tolist(),
            "nonzero_nonlinear": self.nonzero_nonlinear.tolist(),
        }

    def csv_rows(self) -> tuple[list[str], list[list]]:
        """Header + rows of the tidy per-lambda table."""
        header = ["lambda", "mean_metric", "se_metric",
                  "nonzero_linear", "nonzero_nonlinear"]
        rows = [
            [
                float(self.lambdas[i]),
                float(self.mean_metric[i]),
                float(self.se_metric[i]),
                int(self.nonzero_linear[i]),
                int(self.nonzero_nonlinear[i]),
            ]
            for i in range(self.lambdas.size)
        ]
        return header, rows


class LassoFitter:
    """Fitter protocol reference: penalized GLM path.

    A fitter provides fit(dataset, path=None) returning a model with a
    .path attribute, predict(model, x) returning the (n, m) response-scale
    prediction matrix over that path, and nonzero_split(model) returning
    per-lambda (linear, nonlinear) selected-component counts.
    """

    def __init__(
        self,
        penalty_mask: np.ndarray | None = None,
        standardize: bool = True,
        nlambda: int | None = None,
        min_ratio: float | None = None,
    ):
        self.penalty_mask = penalty_mask
        self.standardize = standardize
        self.nlambda = nlambda
        self.min_ratio = min_ratio

    def fit(self, d: Dataset, path: LambdaPath | None = None):
        kwargs = {}
        if self.nlambda is not None:
            kwargs["nlambda"] = self.nlambda
        return fit_lasso_path(
            d,
            path=path,
            penalty_mask=self.penalty_mask,
            standardize=self.standardize,
            min_ratio=self.min_ratio,
            **kwargs,
        )

    def predict(self, model, x: np.ndarray) -> np.ndarray:
        return predict_linear_all(model, x, scale="response")

    def nonzero_split(self, model) -> tuple[np.ndarray, np.ndarray]:
        counts = model.nonzero_counts()
        return counts, np.zeros_like(counts)


def _pick_indices(mean_metric, se_metric, higher_is_better):
    if higher_is_better:
        best = int(np.argmax(mean_metric))
        within = mean_metric >= mean_metric[best] - se_metric[best]
    else:
        best = int(np.argmin(mean_metric))
        within = mean_metric <= mean_metric[best] + se_metric[best]
    return best, int(np.flatnonzero(within)[0])


def fit_cv(
    d: Dataset,
    fitter=None,
    k: int = DEFAULT_FOLDS,
    metric: str = "deviance",
    rng: np.random.Generator | int | None = None,
    stratify: bool | None = None,
):
    """Fit on the full data and score its path by k-fold cross-validation.

    Returns (full_model, CvResult). Binomial responses are stratified by
    default; pass stratify=False to opt out.
    """
    if fitter is None:
        fitter = LassoFitter()
    metric_fn, higher_is_better = resolve_metric(metric)
    rng = np.random.default_rng(rng)
    if stratify is None:
        stratify = d.family.name == "binomial"
    labels = d.y if stratify else None

    full_model = fitter.fit(d)
    path = full_model.path
    m = path.m
    fold_assignments = make_folds(d.n, k, rng, stratify_labels=labels)

    fold_metrics = np.zeros((k, m))
    for fold in range(k):
        test = fold_assignments == fold
        model_f = fitter.fit(d.subset(np.flatnonzero(~test)), path=path)
        preds = fitter.predict(model_f, d.x[test])
        y_test = d.y[test]
        for i in range(m):
            fold_metrics[fold, i] = metric_fn(y_test, preds[:, i], d.family)

    mean_metric = fold_metrics.mean(axis=0)
    se_metric = fold_metrics.std(axis=0, ddof=1) / np.sqrt(k)
    lambda_min_index, lambda_1se_index = _pick_indices(
        mean_metric, se_metric, higher_is_better
    )
    nonzero_linear, nonzero_nonlinear = fitter.nonzero_split(full_model)
    result = CvResult(
        metric_name=metric,
        lambdas=np.array(path.values),
        mean_metric=mean_metric,
        se_metric=se_metric,
        fold_metrics=fold_metrics,
        fold_assignments=fold_assignments,
        lambda_min_index=lambda_min_index,
        lambda_1se_index=lambda_1se_index,
        nonzero_linear=np.asarray(nonzero_linear, dtype=np.int64),
        nonzero_nonlinear=np.asarray(nonzero_nonlinear, dtype=np.int64),
    )
    return full_model, result


def cross_validate(
    d: Dataset,
    fitter=None,
    k: int = DEFAULT_FOLDS,
    metric: str = "deviance",
    rng: np.random.Generator | int | None = None,
    stratify: bool | None = None,
) -> CvResult:
    """Cross-validation scores only (fit_cv without the full model)."""
    _, result = fit_cv(d, fitter=fitter, k=k, metric=metric, rng=rng, stratify=stratify)
    return result
