"""Synthetic benchmark scenarios and the evaluation harness.

Six data-generating scenarios share one recipe: features drawn iid from
Unif[-1,1], a sparse additive signal mu(x), and gaussian noise scaled so
that Var(mu)/sigma^2 hits the requested signal-to-noise ratio. The signal
variance is known in closed form from the uniform moments E X^2 = 1/3,
E X^4 = 1/5, E X^6 = 1/7; the polynomial transforms used (3x^2 - 1 and
5x^3 - 3x) are uncorrelated with x itself, so linear and non-linear
pieces contribute orthogonal signal.

The harness fits each method on fresh replicates, selects lambda by
k-fold cross-validation, and scores mean squared error against the true
signal on a held-out grid, reported relative to predicting the training
mean. Failures are recorded per row and the run continues.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cv import LassoFitter, fit_cv
from .data import Dataset, fmt17
from .errors import DataError, RgamError, UsageError
from .families import GAUSSIAN
from .lasso import FittedLinearModel, predict_linear
from .pipeline import RgamConfig, RgamFitter, RgamModel, predict_rgam

VAR_UNIF = 1.0 / 3.0
# population variances of the transforms under Unif[-1,1]
VAR_QUAD = 4.0 / 5.0  # Var(3x^2 - 1)
VAR_CUBIC = 4.0 / 7.0  # Var(5x^3 - 3x)


def quad_transform(v: np.ndarray) -> np.ndarray:
    """3x^2 - 1: mean-zero, uncorrelated with x under Unif[-1,1]."""
    return 3.0 * v * v - 1.0


def cubic_transform(v: np.ndarray) -> np.ndarray:
    """5x^3 - 3x: mean-zero, uncorrelated with x under Unif[-1,1]."""
    return (5.0 * v * v - 3.0) * v


def _mu_linear(x):
    return np.sum(x[:, :10], axis=1)


def _mu_hier(x):
    z = x[:, :5]
    return np.sum(z + (2.0 / 3.0) * quad_transform(z), axis=1)


def _mu_nonlinear(x):
    return np.sum(2.0 * cubic_transform(x[:, :5]), axis=1)


def _mu_nonhier(x):
    return np.sum(x[:, :5], axis=1) + np.sum(
        (2.0 / 3.0) * quad_transform(x[:, 5:10]), axis=1
    )


def _mu_mixed(x):
    z = x[:, :5]
    lin_cubic = np.sum(z + 0.75 * cubic_transform(z), axis=1)
    return lin_cubic + np.sum(0.85 * quad_transform(x[:, 5:8]), axis=1)


def _mu_mixed_large(x):
    z = x[:, :20]
    lin_cubic = np.sum(z + 0.75 * cubic_transform(z), axis=1)
    return lin_cubic + np.sum(quad_transform(x[:, 20:28]), axis=1)


@dataclass(frozen=True)
class _ScenarioDef:
    ordinal: int
    n: int
    p: int
    n_signal: int
    signal: callable
    signal_variance: float
    description: str


SCENARIOS: dict[str, _ScenarioDef] = {
    "linear": _ScenarioDef(
        0, 100, 200, 10, _mu_linear, 10 * VAR_UNIF,
        "sum of the first 10 features",
    ),
    "hier": _ScenarioDef(
        1, 100, 200, 5, _mu_hier,
        5 * (VAR_UNIF + (2.0 / 3.0) ** 2 * VAR_QUAD),
        "linear plus quadratic effect on the first 5 features",
    ),
    "nonlinear": _ScenarioDef(
        2, 100, 200, 5, _mu_nonlinear, 5 * 4.0 * VAR_CUBIC,
        "purely cubic effect on the first 5 features",
    ),
    "nonhier": _ScenarioDef(
        3, 100, 200, 10, _mu_nonhier,
        5 * VAR_UNIF + 5 * (2.0 / 3.0) ** 2 * VAR_QUAD,
        "linear on features 0-4, quadratic on disjoint features 5-9",
    ),
    "mixed": _ScenarioDef(
        4, 100, 200, 8, _mu_mixed,
        5 * (VAR_UNIF + 0.75**2 * VAR_CUBIC) + 3 * 0.85**2 * VAR_QUAD,
        "linear plus cubic on features 0-4, quadratic on 5-7",
    ),
    "mixed_large": _ScenarioDef(
        5, 1000, 500, 28, _mu_mixed_large,
        20 * (VAR_UNIF + 0.75**2 * VAR_CUBIC) + 8 * VAR_QUAD,
        "linear plus cubic on features 0-19, quadratic on 20-27",
    ),
}

QUICK_SCENARIOS = ("linear", "hier", "nonlinear", "nonhier", "mixed")
DEFAULT_METHODS = ("null", "lasso", "rgam", "rgam_sel")
DEFAULT_SNRS = (1.0, 2.0, 5.0)
DEFAULT_REPLICATES = 10
DEFAULT_N_TEST = 5000

# fixed per-method child streams off each cell's seed sequence
_METHOD_STREAM = {"null": 1, "lasso": 2, "rgam": 3, "rgam_sel": 4}


@dataclass(frozen=True)
class ScenarioSpec:
    """One generated dataset: scenario identity plus size, snr and seed."""

    id: str
    n: int
    p: int
    snr: float
    n_test: int = DEFAULT_N_TEST
    seed: int = 0

    def __post_init__(self):
        if self.id not in SCENARIOS:
            raise UsageError(
                f"unknown scenario {self.id!r}; choose from {sorted(SCENARIOS)}"
            )
        if self.n < 2 or self.n_test < 1:
            raise UsageError("n must be at least 2 and n_test at least 1")
        need = SCENARIOS[self.id].n_signal
        if self.p < need:
            raise UsageError(
                f"scenario {self.id!r} needs at least {need} features, got p={self.p}"
            )
        if not (np.isfinite(self.snr) and self.snr > 0):
            raise UsageError(f"snr must be positive, got {self.snr}")

    @property
    def definition(self) -> _ScenarioDef:
        return SCENARIOS[self.id]


def make_spec(
    name: str,
    snr: float = 2.0,
    seed: int = 0,
    n: int | None = None,
    p: int | None = None,
    n_test: int = DEFAULT_N_TEST,
) -> ScenarioSpec:
    if name not in SCENARIOS:
        raise UsageError(
            f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}"
        )
    d = SCENARIOS[name]
    return ScenarioSpec(
        id=name,
        n=d.n if n is None else n,
        p=d.p if p is None else p,
        snr=snr,
        n_test=n_test,
        seed=seed,
    )


@dataclass(frozen=True)
class GeneratedScenario:
    spec: ScenarioSpec
    train: Dataset
    test_x: np.ndarray
    test_mu: np.ndarray
    sigma: float
    support: tuple


def generate_scenario(
    spec: ScenarioSpec, rng: np.random.Generator | None = None
) -> GeneratedScenario:
    """Draw one train/test replicate of the scenario.

    Draw order (train x, train noise, test x) is fixed so a given rng
    state always produces the same datasets.
    """
    d = spec.definition
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    sigma = float(np.sqrt(d.signal_variance / spec.snr))
    x = rng.uniform(-1.0, 1.0, size=(spec.n, spec.p))
    mu = d.signal(x)
    y = mu + sigma * rng.standard_normal(spec.n)
    test_x = rng.uniform(-1.0, 1.0, size=(spec.n_test, spec.p))
    test_mu = d.signal(test_x)
    return GeneratedScenario(
        spec=spec,
        train=Dataset(x=x, y=y, family=GAUSSIAN),
        test_x=test_x,
        test_mu=test_mu,
        sigma=sigma,
        support=tuple(range(d.n_signal)),
    )


RESULT_FIELDS = [
    "scenario",
    "snr",
    "method",
    "replicate",
    "seed",
    "relative_test_error",
    "n_selected_features",
    "n_selected_linear",
    "n_selected_nonlinear",
    "n_true_features_recovered",
    "lambda_index",
    "error",
]


@dataclass(frozen=True)
class SimResult:
    """One benchmark row; error is non-empty when the fit failed."""

    scenario: str
    snr: float
    method: str
    replicate: int
    relative_test_error: float | None
    n_selected_features: int | None
    n_selected_linear: int | None
    n_selected_nonlinear: int | None
    n_true_features_recovered: int | None
    lambda_index: int | None = None
    seed: int | None = None
    error: str = ""

    def __post_init__(self):
        if self.error:
            return
        if self.relative_test_error is None or self.relative_test_error < 0:
            raise DataError("relative_test_error must be nonnegative")
        for name in (
            "n_selected_features",
            "n_selected_linear",
            "n_selected_nonlinear",
            "n_true_features_recovered",
        ):
            v = getattr(self, name)
            if v is None or v < 0:
                raise DataError(f"{name} must be a nonnegative count")

    def to_row(self) -> list[str]:
        def cell(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return fmt17(v)
            return str(v)

        return [
            self.scenario,
            fmt17(float(self.snr)),
            self.method,
            str(self.replicate),
            cell(self.seed),
            cell(self.relative_test_error),
            cell(self.n_selected_features),
            cell(self.n_selected_linear),
            cell(self.n_selected_nonlinear),
            cell(self.n_true_features_recovered),
            cell(self.lambda_index),
            self.error,
        ]


def _selection_sets(model, lambda_index: int, p: int):
    """(feature set, linear count, nonlinear count) at one path point."""
    if isinstance(model, RgamModel):
        beta = model.step3_model.beta[lambda_index]
        n_lin = int(np.count_nonzero(beta[:p]))
        n_non = int(np.count_nonzero(beta[p:]))
        return set(model.selected_features(lambda_index)), n_lin, n_non
    beta = model.beta[lambda_index]
    sel = set(np.flatnonzero(beta != 0.0).tolist())
    return sel, len(sel), 0


def evaluate_fit(
    model,
    test_x: np.ndarray,
    test_mu: np.ndarray,
    lambda_index: int,
    true_support,
    train_y_mean: float,
    method: str = "",
    replicate: int = 0,
    scenario: str = "",
    snr: float = 0.0,
    seed: int | None = None,
) -> SimResult:
    """Score one fitted model against the known test signal.

    The error ratio's denominator is the test error of always predicting
    the training mean, so 1.0 marks the null model.
    """
    test_x = np.asarray(test_x, dtype=np.float64)
    test_mu = np.asarray(test_mu, dtype=np.float64)
    if test_mu.shape != (test_x.shape[0],):
        raise DataError(
            f"test_mu length {test_mu.shape} does not match test_x rows "
            f"{test_x.shape[0]}"
        )
    if isinstance(model, RgamModel):
        yhat = predict_rgam(model, test_x, lambda_index, scale="response")
        p = model.p
    elif isinstance(model, FittedLinearModel):
        yhat = predict_linear(model, test_x, lambda_index, scale="response")
        p = model.beta.shape[1]
    else:
        raise DataError(f"cannot evaluate model of type {type(model).__name__}")
    null_err = float(np.mean((train_y_mean - test_mu) ** 2))
    model_err = float(np.mean((yhat - test_mu) ** 2))
    selected, n_lin, n_non = _selection_sets(model, lambda_index, p)
    return SimResult(
        scenario=scenario,
        snr=snr,
        method=method,
        replicate=replicate,
        relative_test_error=model_err / null_err,
        n_selected_features=len(selected),
        n_selected_linear=n_lin,
        n_selected_nonlinear=n_non,
        n_true_features_recovered=len(selected & set(true_support)),
        lambda_index=lambda_index,
        seed=seed,
    )


def _evaluate_null(gen: GeneratedScenario, replicate: int, seed: int) -> SimResult:
    spec = gen.spec
    return SimResult(
        scenario=spec.id,
        snr=spec.snr,
        method="null",
        replicate=replicate,
        relative_test_error=1.0,
        n_selected_features=0,
        n_selected_linear=0,
        n_selected_nonlinear=0,
        n_true_features_recovered=0,
        lambda_index=None,
        seed=seed,
    )


def _cell_entropy(master_seed: int, scenario: str, snr: float, replicate: int):
    return (
        int(master_seed),
        SCENARIOS[scenario].ordinal,
        int(round(snr * 1000)),
        int(replicate),
    )


def _derive_int(entropy, key: int) -> int:
    ss = np.random.SeedSequence(entropy, spawn_key=(key,))
    return int(np.random.default_rng(ss).integers(0, 2**63 - 1))


def _run_method(
    method: str, gen: GeneratedScenario, k: int, entropy, replicate: int, seed: int
) -> SimResult:
    fold_rng = np.random.default_rng(
        np.random.SeedSequence(entropy, spawn_key=(_METHOD_STREAM[method],))
    )
    if method == "lasso":
        fitter = LassoFitter()
    else:
        cfg = RgamConfig(
            init_nz="all" if method == "rgam" else "none",
            seed=int(fold_rng.integers(0, 2**63 - 1)),
        )
        fitter = RgamFitter(cfg)
    model, cv = fit_cv(gen.train, fitter=fitter, k=k, metric="deviance", rng=fold_rng)
    return evaluate_fit(
        model,
        gen.test_x,
        gen.test_mu,
        cv.lambda_min_index,
        gen.support,
        train_y_mean=float(np.mean(gen.train.y)),
        method=method,
        replicate=replicate,
        scenario=gen.spec.id,
        snr=gen.spec.snr,
        seed=seed,
    )


def run_benchmark(
    scenarios=QUICK_SCENARIOS,
    methods=DEFAULT_METHODS,
    replicates: int = DEFAULT_REPLICATES,
    seed: int = 0,
    snrs=DEFAULT_SNRS,
    k: int = 5,
    n_test: int = DEFAULT_N_TEST,
    row_callback=None,
) -> list[SimResult]:
    """Run the full grid (scenario x snr x replicate x method).

    Every cell draws its data from a seed sequence keyed on (master seed,
    scenario, snr, replicate), so any subset of the grid reproduces the
    same rows as the full run. All methods within a cell share the data.
    Per-row failures are captured in the error column; the run continues.
    """
    scenarios = tuple(scenarios)
    methods = tuple(methods)
    for name in scenarios:
        if name not in SCENARIOS:
            raise UsageError(
                f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}"
            )
    for m in methods:
        if m not in DEFAULT_METHODS:
            raise UsageError(f"unknown method {m!r}; choose from {DEFAULT_METHODS}")
    if replicates < 1:
        raise UsageError("replicates must be at least 1")
    results: list[SimResult] = []
    for name in scenarios:
        for snr in snrs:
            for rep in range(replicates):
                entropy = _cell_entropy(seed, name, snr, rep)
                data_seed = _derive_int(entropy, 0)
                spec = make_spec(name, snr=float(snr), seed=data_seed, n_test=n_test)
                gen = generate_scenario(spec)
                for method in methods:
                    try:
                        if method == "null":
                            row = _evaluate_null(gen, rep, data_seed)
                        else:
                            row = _run_method(method, gen, k, entropy, rep, data_seed)
                    except (RgamError, np.linalg.LinAlgError, FloatingPointError) as exc:
                        row = SimResult(
                            scenario=name,
                            snr=float(snr),
                            method=method,
                            replicate=rep,
                            relative_test_error=None,
                            n_selected_features=None,
                            n_selected_linear=None,
                            n_selected_nonlinear=None,
                            n_true_features_recovered=None,
                            lambda_index=None,
                            seed=data_seed,
                            error=f"{type(exc).__name__}: {exc}",
                        )
                    results.append(row)
                    if row_callback is not None:
                        row_callback(row)
    return results


SUMMARY_FIELDS = [
    "scenario",
    "snr",
    "method",
    "n_runs",
    "n_failed",
    "rel_err_q25",
    "rel_err_median",
    "rel_err_q75",
    "selected_linear_median",
    "selected_nonlinear_median",
    "recovered_median",
]


def summarize_results(results) -> list[dict]:
    """Median and quartile table per (scenario, snr, method) cell."""
    groups: dict[tuple, list[SimResult]] = {}
    order: list[tuple] = []
    for r in results:
        key = (r.scenario, float(r.snr), r.method)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(r)
    out = []
    for key in order:
        rows = groups[key]
        ok = [r for r in rows if not r.error]
        entry = {
            "scenario": key[0],
            "snr": key[1],
            "method": key[2],
            "n_runs": len(rows),
            "n_failed": len(rows) - len(ok),
            "rel_err_q25": None,
            "rel_err_median": None,
            "rel_err_q75": None,
            "selected_linear_median": None,
            "selected_nonlinear_median": None,
            "recovered_median": None,
        }
        if ok:
            rel = np.array([r.relative_test_error for r in ok])
            q25, q50, q75 = np.percentile(rel, [25.0, 50.0, 75.0])
            entry["rel_err_q25"] = float(q25)
            entry["rel_err_median"] = float(q50)
            entry["rel_err_q75"] = float(q75)
            entry["selected_linear_median"] = float(
                np.median([r.n_selected_linear for r in ok])
            )
            entry["selected_nonlinear_median"] = float(
                np.median([r.n_selected_nonlinear for r in ok])
            )
            entry["recovered_median"] = float(
                np.median([r.n_true_features_recovered for r in ok])
            )
        out.append(entry)
    return out


def summary_rows(summary: list[dict]) -> tuple[list[str], list[list[str]]]:
    """(header, rows) form of a summary table for CSV output."""
    rows = []
    for entry in summary:
        row = []
        for name in SUMMARY_FIELDS:
            v = entry[name]
            if v is None:
                row.append("")
            elif isinstance(v, float):
                row.append(fmt17(v))
            else:
                row.append(str(v))
        rows.append(row)
    return list(SUMMARY_FIELDS), rows
