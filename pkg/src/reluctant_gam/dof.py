"""Monte Carlo effective degrees of freedom for arbitrary fitters.

Degrees of freedom of a fitting procedure is the summed covariance between
each response value and its fitted value, divided by the noise variance.
The estimate here simulates B responses y*_b = mu + sigma z_b around a
fixed signal, refits each, and averages the per-replicate covariance
contributions. Replicate b draws from an independent child stream with
spawn key (b, .), so growing B extends the replicate list without
reshuffling earlier draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DataError, RgamError, SolverError
from .families import GAUSSIAN
from .pipeline import RgamConfig, fit_rgam_unpenalized, predict_rgam


@dataclass(frozen=True)
class DofConfig:
    """Simulation setup: fixed signal, noise level, replicate count.

    a holds the centering constants subtracted from the fitted values in
    the covariance estimate; any fixed constants are valid, zero (the
    default) is customary.
    """

    mu: np.ndarray
    sigma: float
    B: int
    a: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        if mu.ndim != 1 or mu.size < 1:
            raise DataError("mu must be a non-empty 1-d vector")
        if not np.all(np.isfinite(mu)):
            raise DataError("mu must be finite")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise DataError(f"sigma must be positive, got {self.sigma}")
        if self.B < 2:
            raise DataError(f"B must be at least 2, got {self.B}")
        a = self.a
        a = np.zeros(mu.size) if a is None else np.asarray(a, dtype=np.float64)
        if a.shape != mu.shape:
            raise DataError("a must match mu in length")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)


@dataclass(frozen=True)
class DofEstimate:
    """df_hat with its Monte Carlo standard error.

    replicate_values holds each replicate's covariance contribution; their
    mean is df_hat and their sd / sqrt(B) the standard error.
    """

    df_hat: float
    standard_error: float
    B: int
    replicate_values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.replicate_values, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "replicate_values", arr)

    def to_dict(self) -> dict:
        return {
            "df_hat": float(self.df_hat),
            "standard_error": float(self.standard_error),
            "B": int(self.B),
        }


def _replicate_rngs(seed: int, b: int):
    noise = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b, 0)))
    fit = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b, 1)))
    return noise, fit


def estimate_df(fitter, x: np.ndarray, cfg: DofConfig) -> DofEstimate:
    """Monte Carlo degrees of freedom of fitter on the design x.

    fitter(x, y, rng) must return the length-n fitted vector and be
    deterministic given rng. x stays fixed across replicates.
    """
    x = np.asarray(x, dtype=np.float64)
    n = cfg.mu.size
    if x.ndim != 2 or x.shape[0] != n:
        raise DataError(f"x must have {n} rows to match mu, got shape {x.shape}")
    sig_sq = cfg.sigma**2
    values = np.zeros(cfg.B)
    for b in range(cfg.B):
        noise_rng, fit_rng = _replicate_rngs(cfg.seed, b)
        z = noise_rng.standard_normal(n)
        y_b = cfg.mu + cfg.sigma * z
        try:
            fitted = np.asarray(fitter(x, y_b, fit_rng), dtype=np.float64)
        except RgamError as exc:
            raise type(exc)(f"fitter failed on replicate {b}: {exc}") from exc
        except Exception as exc:
            raise SolverError(f"fitter failed on replicate {b}: {exc}") from exc
        if fitted.shape != (n,):
            raise DataError(
                f"fitter returned shape {fitted.shape} on replicate {b}, "
                f"expected ({n},)"
            )
        values[b] = float(np.sum((fitted - cfg.a) * (y_b - cfg.mu))) / sig_sq
    df_hat = float(np.mean(values))
    se = float(np.std(values, ddof=1) / np.sqrt(cfg.B))
    return DofEstimate(df_hat=df_hat, standard_error=se, B=cfg.B, replicate_values=values)


def fit_ols(x: np.ndarray, y: np.ndarray, rng=None) -> np.ndarray:
    """Least squares with intercept; p + 1 degrees of freedom when full rank."""
    design = np.column_stack([np.ones(x.shape[0]), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return design @ coef

def fit_grand_mean(x: np.ndarray, y: np.ndarray, rng=None) -> np.ndarray:
    return np.full(x.shape[0], float(np.mean(y)))


def fit_identity(x: np.ndarray, y: np.ndarray, rng=None) -> np.ndarray:
    return np.array(y, dtype=np.float64)


def make_smoother_fitter(s_matrix: np.ndarray):
    """Fixed linear smoother y -> S y; its df is trace(S)."""
    s_matrix = np.asarray(s_matrix, dtype=np.float64)
    if s_matrix.ndim != 2 or s_matrix.shape[0] != s_matrix.shape[1]:
        raise DataError("smoother matrix must be square")

    def fitter(x, y, rng=None):
        if y.shape[0] != s_matrix.shape[0]:
            raise DataError("smoother size does not match the response length")
        return s_matrix @ y

    return fitter


def make_rgam_dof_fitter(config: RgamConfig | None = None, step1: str = "cv"):
    """Unpenalized additive-model fitter for df studies.

    Refits the whole pipeline per replicate with the Step-3 penalty at
    exactly zero; the per-replicate rng reseeds the Step-1 fold shuffle.
    Requires n to exceed the combined column count (validated per fit).
    """
    base = config if config is not None else RgamConfig()

    def fitter(x, y, rng):
        from dataclasses import replace

        seed = int(rng.integers(0, 2**63 - 1)) if rng is not None else base.seed
        cfg = replace(base, seed=seed)
        d = Dataset(x=x, y=y, family=GAUSSIAN)
        model = fit_rgam_unpenalized(d, cfg, step1=step1)
        return predict_rgam(model, x, model.path.m - 1)

    return fitter
