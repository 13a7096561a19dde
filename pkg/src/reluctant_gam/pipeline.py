"""Sparse additive model with a linear-first bias, fit in three steps.

Step 1 cross-validates a plain penalized linear fit and keeps its
residual. Step 2 gives each candidate feature one shot at that residual
through a low-df smoothing spline, then shrinks every spline column to a
deliberately small common scale: gamma times the average feature sd.
Step 3 runs one joint penalized fit over the original features plus the
spline columns. Because the spline columns were built on leftover signal
only and kept small, a feature enters non-linearly only when the linear
fit genuinely missed something.

Candidate choice makes the two variants: init_nz="all" smooths every
feature; init_nz="none" smooths only the Step-1 active set (the cheaper
selective variant); an explicit index list is unioned with the active set.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .cv import CvResult, LassoFitter, fit_cv
from .data import Dataset, atomic_write_text, population_sd
from .errors import DataError, SolverError
from .families import resolve_family
from .lasso import (
    DEFAULT_NLAMBDA,
    FittedLinearModel,
    LambdaPath,
    fit_lasso_path,
    predict_linear,
    predict_linear_all,
)
from .spline import SmoothingSplineFit, evaluate_spline, fit_smoothing_spline

DEFAULT_DF = 4.0
DEFAULT_STEP1_FOLDS = 5
GAMMA_DEFAULT_SELECTIVE = 0.8  # init_nz = "none"
GAMMA_DEFAULT_FULL = 0.6       # any other candidate rule
DEGENERATE_SD_TOL = 1e-10
SERIALIZATION_VERSION = "1"


def _normalize_init_nz(init_nz):
    if isinstance(init_nz, str):
        if init_nz not in ("all", "none"):
            raise DataError(
                f"init_nz must be 'all', 'none', or an index list, got {init_nz!r}"
            )
        return init_nz
    indices = tuple(sorted({int(i) for i in init_nz}))
    if any(i < 0 for i in indices):
        raise DataError("init_nz indices must be non-negative (0-based)")
    return indices


@dataclass(frozen=True)
class RgamConfig:
    """Hyperparameters of the three-step fit.

    gamma: spline-column scale relative to the mean feature sd; None picks
    0.8 when init_nz="none" and 0.6 otherwise. df: spline flexibility in
    effective degrees of freedom. init_nz: which features get a spline
    column ("all", "none" = Step-1 active set only, or explicit 0-based
    indices unioned with the active set). seed drives the Step-1 fold
    shuffle; everything downstream is deterministic given it.
    """

    gamma: float | None = None
    df: float = DEFAULT_DF
    init_nz: object = "all"
    nfolds_step1: int = DEFAULT_STEP1_FOLDS
    nlambda: int = DEFAULT_NLAMBDA
    min_ratio: float | None = None
    step1_lambda_rule: str = "min"
    standardize_step3: bool = True
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "init_nz", _normalize_init_nz(self.init_nz))
        if self.gamma is not None and not 0.0 <= self.gamma <= 1.0:
            raise DataError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.df < 2.0:
            raise DataError(f"df must be at least 2, got {self.df}")
        if self.nfolds_step1 < 2:
            raise DataError("nfolds_step1 must be at least 2")
        if self.nlambda < 1:
            raise DataError("nlambda must be at least 1")
        if self.min_ratio is not None and not 0.0 < self.min_ratio < 1.0:
            raise DataError("min_ratio must lie in (0, 1)")
        if self.step1_lambda_rule not in ("min", "1se"):
            raise DataError(
                f"step1_lambda_rule must be 'min' or '1se', got {self.step1_lambda_rule!r}"
            )

    @property
    def resolved_gamma(self) -> float:
        if self.gamma is not None:
            return float(self.gamma)
        return GAMMA_DEFAULT_SELECTIVE if self.init_nz == "none" else GAMMA_DEFAULT_FULL

    def to_dict(self) -> dict:
        return {
            "gamma": None if self.gamma is None else float(self.gamma),
            "resolved_gamma": self.resolved_gamma,
            "df": float(self.df),
            "init_nz": self.init_nz if isinstance(self.init_nz, str) else list(self.init_nz),
            "nfolds_step1": int(self.nfolds_step1),
            "nlambda": int(self.nlambda),
            "min_ratio": None if self.min_ratio is None else float(self.min_ratio),
            "step1_lambda_rule": self.step1_lambda_rule,
            "standardize_step3": bool(self.standardize_step3),
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RgamConfig":
        init_nz = payload["init_nz"]
        if not isinstance(init_nz, str):
            init_nz = tuple(init_nz)
        return cls(
            gamma=payload["gamma"],
            df=payload["df"],
            init_nz=init_nz,
            nfolds_step1=payload["nfolds_step1"],
            nlambda=payload["nlambda"],
            min_ratio=payload["min_ratio"],
            step1_lambda_rule=payload["step1_lambda_rule"],
            standardize_step3=payload["standardize_step3"],
            seed=payload["seed"],
        )


@dataclass(frozen=True)
class SplineFeature:
    """One candidate feature's residual spline and its common-scale factor.

    Inactive features (too few distinct values, or a constant spline fit)
    contribute no column to the Step-3 design.
    """

    feature_index: int
    spline: SmoothingSplineFit | None
    scale_factor: float
    active: bool
    note: str = ""


def select_nonlinear_candidates(active_set, init_nz, p: int):
    """Which features get a spline column.

    "all" -> every feature; "none" -> the active set alone; an explicit
    index tuple -> its union with the active set. Returns sorted indices.
    """
    active = sorted({int(j) for j in active_set})
    if any(j < 0 or j >= p for j in active):
        raise DataError(f"active-set index out of range [0, {p - 1}]")
    if init_nz == "all":
        return list(range(p))
    if init_nz == "none":
        return active
    explicit = _normalize_init_nz(init_nz)
    if isinstance(explicit, str):  # pragma: no cover - normalized above
        raise DataError("explicit candidate list expected")
    if any(j >= p for j in explicit):
        raise DataError(f"init_nz index out of range [0, {p - 1}]")
    return sorted(set(explicit) | set(active))


def compute_residual(y: np.ndarray, fitted_link: np.ndarray, family) -> np.ndarray:
    """Response-scale residual: y minus the inverse-linked fit."""
    y = np.asarray(y, dtype=np.float64)
    fitted_link = np.asarray(fitted_link, dtype=np.float64)
    if y.shape != fitted_link.shape:
        raise DataError("response and fitted vectors must have equal length")
    return y - family.inverse_link(fitted_link)


@dataclass(frozen=True)
class RgamModel:
    """Everything the three-step fit produced.

    step3_model carries the joint coefficient path over p linear columns
    followed by one column per active spline feature, in spline_bank
    order. step1_model and residual are kept for inspection but are not
    needed for prediction (and are omitted from serialized models).
    """

    config: RgamConfig
    family: object
    p: int
    column_names: tuple
    step1_model: FittedLinearModel | None
    step1_cv: CvResult | None
    step1_lambda_index: int
    step1_lambda_choice: float
    active_set: tuple
    candidates: tuple
    residual: np.ndarray
    spline_bank: tuple
    step3_model: FittedLinearModel
    warnings: tuple = ()

    def __post_init__(self):
        residual = np.asarray(self.residual, dtype=np.float64)
        residual.setflags(write=False)
        object.__setattr__(self, "residual", residual)

    @property
    def path(self) -> LambdaPath:
        return self.step3_model.path

    @property
    def active_splines(self) -> tuple:
        return tuple(f for f in self.spline_bank if f.active)

    @property
    def nonlinear_feature_indices(self) -> tuple:
        return tuple(f.feature_index for f in self.active_splines)

    def nonzero_linear_counts(self) -> np.ndarray:
        return np.count_nonzero(self.step3_model.beta[:, : self.p], axis=1)

    def nonzero_nonlinear_counts(self) -> np.ndarray:
        return np.count_nonzero(self.step3_model.beta[:, self.p :], axis=1)

    def selected_features(self, lambda_index: int) -> list:
        """Features whose linear OR spline coefficient is nonzero."""
        beta = self.step3_model.beta[lambda_index]
        selected = set(np.flatnonzero(beta[: self.p] != 0.0).tolist())
        for offset, feat in enumerate(self.active_splines):
            if beta[self.p + offset] != 0.0:
                selected.add(feat.feature_index)
        return sorted(selected)


def _fit_spline_bank(d: Dataset, residual, candidates, gamma, df):
    """Fit, measure, and rescale one spline per candidate feature."""
    sds = np.array([population_sd(d.x[:, j]) for j in range(d.p)])
    mean_sd = float(np.mean(sds))
    target = gamma * mean_sd
    bank = []
    warnings = []
    for j in candidates:
        try:
            spline = fit_smoothing_spline(d.x[:, j], residual, target_df=df)
        except (DataError, SolverError) as exc:
            bank.append(SplineFeature(j, None, 0.0, False, note=str(exc)))
            warnings.append(f"spline for feature {j} skipped: {exc}")
            continue
        sd_fit = population_sd(spline.fitted)
        if sd_fit < DEGENERATE_SD_TOL:
            bank.append(SplineFeature(j, spline, 0.0, False, note="constant spline fit"))
            warnings.append(f"spline for feature {j} is constant; deactivated")
            continue
        bank.append(SplineFeature(j, spline, target / sd_fit, True))
    return tuple(bank), warnings


def _spline_columns(bank, x, n):
    columns = []
    for feat in bank:
        if not feat.active:
            continue
        columns.append(
            evaluate_spline(feat.spline, x[:, feat.feature_index]) * feat.scale_factor
        )
    if not columns:
        return np.empty((n, 0))
    return np.column_stack(columns)


def fit_rgam(
    d: Dataset,
    config: RgamConfig | None = None,
    step3_path: LambdaPath | None = None,
) -> RgamModel:
    """Run the full three-step fit. Deterministic given config.seed.

    step3_path overrides the joint path (used by cross-validation to pin
    one path across folds); by default a fresh path is built on the
    combined design.
    """
    if config is None:
        config = RgamConfig()
    if isinstance(config.init_nz, tuple) and any(j >= d.p for j in config.init_nz):
        raise DataError(f"init_nz index out of range [0, {d.p - 1}]")
    gamma = config.resolved_gamma

    step1_model, step1_cv = fit_cv(
        d,
        fitter=LassoFitter(),
        k=config.nfolds_step1,
        metric="deviance",
        rng=config.seed,
    )
    if config.step1_lambda_rule == "min":
        idx1 = step1_cv.lambda_min_index
    else:
        idx1 = step1_cv.lambda_1se_index
    eta1 = predict_linear(step1_model, d.x, idx1, scale="link")
    residual = compute_residual(d.y, eta1, d.family)
    active_set = np.flatnonzero(step1_model.beta[idx1] != 0.0).tolist()

    candidates = select_nonlinear_candidates(active_set, config.init_nz, d.p)
    bank, warnings = _fit_spline_bank(d, residual, candidates, gamma, config.df)
    if candidates and not any(f.active for f in bank):
        warnings.append("all spline features degenerate; model is purely linear")

    f_cols = _spline_columns(bank, d.x, d.n)
    spline_names = tuple(
        f"s({d.column_names[feat.feature_index]})" for feat in bank if feat.active
    )
    combined = Dataset(
        x=np.hstack([d.x, f_cols]),
        y=d.y,
        family=d.family,
        column_names=tuple(d.column_names) + spline_names,
        response_name=d.response_name,
    )
    step3_model = fit_lasso_path(
        combined,
        path=step3_path,
        standardize=config.standardize_step3,
        nlambda=config.nlambda,
        min_ratio=config.min_ratio,
    )

    return RgamModel(
        config=config,
        family=d.family,
        p=d.p,
        column_names=tuple(d.column_names),
        step1_model=step1_model,
        step1_cv=step1_cv,
        step1_lambda_index=int(idx1),
        step1_lambda_choice=float(step1_model.path.values[idx1]),
        active_set=tuple(active_set),
        candidates=tuple(candidates),
        residual=residual,
        spline_bank=bank,
        step3_model=step3_model,
        warnings=tuple(warnings),
    )


def predict_rgam(
    model: RgamModel,
    x_new: np.ndarray,
    lambda_index: int,
    scale: str = "link",
) -> np.ndarray:
    """Predictions at one joint-path point."""
    x_new = np.asarray(x_new, dtype=np.float64)
    if x_new.ndim != 2 or x_new.shape[1] != model.p:
        raise DataError(
            f"x_new must have {model.p} columns, got shape {x_new.shape}"
        )
    f_cols = _spline_columns(model.spline_bank, x_new, x_new.shape[0])
    return predict_linear(
        model.step3_model, np.hstack([x_new, f_cols]), lambda_index, scale=scale
    )


def predict_rgam_all(
    model: RgamModel, x_new: np.ndarray, scale: str = "link"
) -> np.ndarray:
    """(n_new, m) prediction matrix over the whole joint path."""
    x_new = np.asarray(x_new, dtype=np.float64)
    if x_new.ndim != 2 or x_new.shape[1] != model.p:
        raise DataError(
            f"x_new must have {model.p} columns, got shape {x_new.shape}"
        )
    f_cols = _spline_columns(model.spline_bank, x_new, x_new.shape[0])
    return predict_linear_all(
        model.step3_model, np.hstack([x_new, f_cols]), scale=scale
    )


class RgamFitter:
    """Cross-validation adapter: re-runs the whole pipeline per fold.

    Each fold call repeats Steps 1-3 (including the inner Step-1 CV) on
    the training split only, so no held-out information leaks in. That
    costs a full pipeline per fold.
    """

    def __init__(self, config: RgamConfig | None = None):
        self.config = config if config is not None else RgamConfig()

    def fit(self, d: Dataset, path: LambdaPath | None = None) -> RgamModel:
        return fit_rgam(d, self.config, step3_path=path)

    def predict(self, model: RgamModel, x: np.ndarray) -> np.ndarray:
        return predict_rgam_all(model, x, scale="response")

    def nonzero_split(self, model: RgamModel):
        return model.nonzero_linear_counts(), model.nonzero_nonlinear_counts()


def fit_rgam_unpenalized(
    d: Dataset,
    config: RgamConfig | None = None,
    step1: str = "cv",
) -> RgamModel:
    """Fit with the Step-3 penalty removed (path ends at exactly 0).

    step1="cv" keeps the usual cross-validated Step 1 (so the selective
    variant still has a sparse active set); step1="unpenalized" also drops
    the Step-1 penalty, which needs n > p. Either way the returned model's
    last path index is the unpenalized joint fit, which requires n to
    exceed the combined column count plus intercept.
    """
    if config is None:
        config = RgamConfig()
    if step1 not in ("cv", "unpenalized"):
        raise DataError(f"step1 must be 'cv' or 'unpenalized', got {step1!r}")

    if step1 == "unpenalized":
        if d.n <= d.p + 1:
            raise DataError(
                f"unpenalized Step 1 needs n > p + 1 (n={d.n}, p={d.p})"
            )
        base = fit_lasso_path(d, path=_ladder_to_zero(d))
        idx1 = base.path.m - 1
        eta1 = predict_linear(base, d.x, idx1, scale="link")
        residual = compute_residual(d.y, eta1, d.family)
        active_set = np.flatnonzero(base.beta[idx1] != 0.0).tolist()
        candidates = select_nonlinear_candidates(active_set, config.init_nz, d.p)
        bank, warnings = _fit_spline_bank(
            d, residual, candidates, config.resolved_gamma, config.df
        )
        f_cols = _spline_columns(bank, d.x, d.n)
        spline_names = tuple(
            f"s({d.column_names[f.feature_index]})" for f in bank if f.active
        )
        combined = Dataset(
            x=np.hstack([d.x, f_cols]),
            y=d.y,
            family=d.family,
            column_names=tuple(d.column_names) + spline_names,
            response_name=d.response_name,
        )
        _require_overdetermined(d.n, combined.p)
        step3_model = fit_lasso_path(
            combined,
            path=_ladder_to_zero(combined),
            standardize=config.standardize_step3,
        )
        return RgamModel(
            config=config,
            family=d.family,
            p=d.p,
            column_names=tuple(d.column_names),
            step1_model=base,
            step1_cv=None,
            step1_lambda_index=idx1,
            step1_lambda_choice=0.0,
            active_set=tuple(active_set),
            candidates=tuple(candidates),
            residual=residual,
            spline_bank=bank,
            step3_model=step3_model,
            warnings=tuple(warnings),
        )

    # step1 == "cv": run the normal pipeline, then refit Step 3 on a
    # ladder that ends at exactly zero penalty.
    model = fit_rgam(d, config)
    n_columns = model.p + len(model.active_splines)
    _require_overdetermined(d.n, n_columns)
    combined = Dataset(
        x=np.hstack([d.x, _spline_columns(model.spline_bank, d.x, d.n)]),
        y=d.y,
        family=d.family,
        column_names=tuple(d.column_names)
        + tuple(f"s({d.column_names[f.feature_index]})" for f in model.active_splines),
        response_name=d.response_name,
    )
    step3_model = fit_lasso_path(
        combined,
        path=_ladder_to_zero(combined),
        standardize=config.standardize_step3,
    )
    return RgamModel(
        config=config,
        family=d.family,
        p=model.p,
        column_names=model.column_names,
        step1_model=model.step1_model,
        step1_cv=model.step1_cv,
        step1_lambda_index=model.step1_lambda_index,
        step1_lambda_choice=model.step1_lambda_choice,
        active_set=model.active_set,
        candidates=model.candidates,
        residual=model.residual,
        spline_bank=model.spline_bank,
        step3_model=step3_model,
        warnings=model.warnings,
    )


def _require_overdetermined(n: int, n_columns: int):
    if n <= n_columns + 1:
        raise DataError(
            "unpenalized fit needs n to exceed the column count plus "
            f"intercept (n={n}, columns={n_columns})"
        )


def _ladder_to_zero(d: Dataset) -> LambdaPath:
    """Short warm-start ladder from lambda_max down to exactly 0."""
    from .lasso import default_lambda_path

    top = default_lambda_path(d, nlambda=1).lambda_max
    values = np.append(top * 10.0 ** -np.arange(4, dtype=np.float64), 0.0)
    return LambdaPath(values=values, min_ratio=None)


def _spline_feature_to_dict(feat: SplineFeature) -> dict:
    payload = {
        "feature_index": int(feat.feature_index),
        "scale_factor": float(feat.scale_factor),
        "active": bool(feat.active),
        "note": feat.note,
        "spline": None,
    }
    if feat.spline is not None:
        payload["spline"] = {
            "knots": feat.spline.knots.tolist(),
            "values": feat.spline.values.tolist(),
            "second_derivs": feat.spline.second_derivs.tolist(),
            "smoothing_parameter": float(feat.spline.smoothing_parameter),
            "effective_df": float(feat.spline.effective_df),
        }
    return payload


def _spline_feature_from_dict(payload: dict) -> SplineFeature:
    spline = None
    if payload["spline"] is not None:
        sp = payload["spline"]
        spline = SmoothingSplineFit(
            knots=np.asarray(sp["knots"], dtype=np.float64),
            values=np.asarray(sp["values"], dtype=np.float64),
            second_derivs=np.asarray(sp["second_derivs"], dtype=np.float64),
            smoothing_parameter=float(sp["smoothing_parameter"]),
            effective_df=float(sp["effective_df"]),
            fitted=np.empty(0),
        )
    return SplineFeature(
        feature_index=int(payload["feature_index"]),
        spline=spline,
        scale_factor=float(payload["scale_factor"]),
        active=bool(payload["active"]),
        note=payload.get("note", ""),
    )


def model_to_dict(model: RgamModel) -> dict:
    """JSON-ready document; prediction-relevant state only.

    Step-1 internals (coefficient path, CV curves, residual) are dropped;
    they are diagnostics, not inputs to prediction.
    """
    step3 = model.step3_model
    return {
        "version": SERIALIZATION_VERSION,
        "kind": "additive-model",
        "family": model.family.name,
        "config": model.config.to_dict(),
        "p": int(model.p),
        "column_names": list(model.column_names),
        "step1_lambda_index": int(model.step1_lambda_index),
        "step1_lambda_choice": float(model.step1_lambda_choice),
        "active_set": list(model.active_set),
        "candidates": list(model.candidates),
        "spline_bank": [_spline_feature_to_dict(f) for f in model.spline_bank],
        "warnings": list(model.warnings),
        "step3": {
            "lambda_values": step3.path.values.tolist(),
            "lambda_min_ratio": step3.path.min_ratio,
            "beta": step3.beta.tolist(),
            "intercepts": step3.intercepts.tolist(),
            "null_deviance": float(step3.null_deviance),
            "deviances": step3.deviances.tolist(),
        },
    }


def model_from_dict(payload: dict) -> RgamModel:
    version = payload.get("version")
    if version != SERIALIZATION_VERSION:
        raise DataError(
            f"unsupported model file version {version!r} "
            f"(this build reads version {SERIALIZATION_VERSION!r})"
        )
    family = resolve_family(payload["family"])
    step3 = payload["step3"]
    path = LambdaPath(
        values=np.asarray(step3["lambda_values"], dtype=np.float64),
        min_ratio=step3["lambda_min_ratio"],
    )
    step3_model = FittedLinearModel(
        beta=np.asarray(step3["beta"], dtype=np.float64),
        intercepts=np.asarray(step3["intercepts"], dtype=np.float64),
        path=path,
        family=family,
        null_deviance=float(step3["null_deviance"]),
        deviances=np.asarray(step3["deviances"], dtype=np.float64),
    )
    return RgamModel(
        config=RgamConfig.from_dict(payload["config"]),
        family=family,
        p=int(payload["p"]),
        column_names=tuple(payload["column_names"]),
        step1_model=None,
        step1_cv=None,
        step1_lambda_index=int(payload["step1_lambda_index"]),
        step1_lambda_choice=float(payload["step1_lambda_choice"]),
        active_set=tuple(payload["active_set"]),
        candidates=tuple(payload["candidates"]),
        residual=np.empty(0),
        spline_bank=tuple(
            _spline_feature_from_dict(f) for f in payload["spline_bank"]
        ),
        step3_model=step3_model,
        warnings=tuple(payload["warnings"]),
    )


def save_rgam(model: RgamModel, path: str) -> None:
    atomic_write_text(path, json.dumps(model_to_dict(model), sort_keys=True, indent=1))


def load_rgam(path: str) -> RgamModel:
    if not os.path.exists(path):
        raise DataError(f"input file not found: {path}")
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    return model_from_dict(payload)
