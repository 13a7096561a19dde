"""Response families for the penalized generalized linear models.

Each family bundles the link function, its inverse, the variance function
used for IRLS weights, and the unit deviance. Instances are stateless and
shared; resolve one from its name with :func:`resolve_family`.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError

# Probability clamp used inside the binomial deviance so that log() stays finite.
PROB_EPS = 1e-10


class Family:
    """Base class; concrete families override every method."""

    name: str = ""

    def link(self, mu: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inverse_link(self, eta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def variance(self, mu: np.ndarray) -> np.ndarray:
        """Variance function evaluated at the mean (IRLS weight before flooring)."""
        raise NotImplementedError

    def unit_deviance(self, y: np.ndarray, mu: np.ndarray) -> np.ndarray:
        """Per-observation deviance contribution."""
        raise NotImplementedError

    def validate_response(self, y: np.ndarray) -> None:
        """Raise DataError when y is not a legal response for this family."""
        raise NotImplementedError

    def null_eta(self, y: np.ndarray) -> float:
        """Link-scale intercept of the intercept-only model (the null fit)."""
        mean = float(np.mean(y))
        return float(self.link(np.array([mean]))[0])

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Family({self.name!r})"


class Gaussian(Family):
    name = "gaussian"

    def link(self, mu):
        return np.asarray(mu, dtype=np.float64)

    def inverse_link(self, eta):
        return np.asarray(eta, dtype=np.float64)

    def variance(self, mu):
        return np.ones_like(np.asarray(mu, dtype=np.float64))

    def unit_deviance(self, y, mu):
        resid = np.asarray(y, dtype=np.float64) - np.asarray(mu, dtype=np.float64)
        return resid * resid

    def validate_response(self, y):
        pass  # finiteness is checked by Dataset


class Binomial(Family):
    name = "binomial"

    def link(self, mu):
        mu = np.asarray(mu, dtype=np.float64)
        return np.log(mu / (1.0 - mu))

    def inverse_link(self, eta):
        eta = np.asarray(eta, dtype=np.float64)
        # Branch on sign so exp() never overflows.
        out = np.empty_like(eta)
        pos = eta >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
        expe = np.exp(eta[~pos])
        out[~pos] = expe / (1.0 + expe)
        return out

    def variance(self, mu):
        mu = np.asarray(mu, dtype=np.float64)
        return mu * (1.0 - mu)

    def unit_deviance(self, y, mu):
        y = np.asarray(y, dtype=np.float64)
        p = np.clip(np.asarray(mu, dtype=np.float64), PROB_EPS, 1.0 - PROB_EPS)
        return -2.0 * (y * np.log(p) + (1.0 - y) * np.log(1.0 - p))

    def validate_response(self, y):
        if not np.all((y == 0.0) | (y == 1.0)):
            raise DataError("binomial response must contain only 0 and 1 values")

    def null_eta(self, y):
        p = float(np.mean(y))
        if p <= 0.0 or p >= 1.0:
            raise DataError("binomial response is constant; no model can be fit")
        return float(np.log(p / (1.0 - p)))


class Poisson(Family):
    name = "poisson"

    def link(self, mu):
        return np.log(np.asarray(mu, dtype=np.float64))

    def inverse_link(self, eta):
        return np.exp(np.asarray(eta, dtype=np.float64))

    def variance(self, mu):
        return np.asarray(mu, dtype=np.float64)

    def unit_deviance(self, y, mu):
        y = np.asarray(y, dtype=np.float64)
        mu = np.asarray(mu, dtype=np.float64)
        # y * log(y / mu) with the y == 0 limit handled explicitly.
        term = np.zeros_like(mu)
        nz = y > 0
        term[nz] = y[nz] * np.log(y[nz] / mu[nz])
        return 2.0 * (term - (y - mu))

    def validate_response(self, y):
        if np.any(y < 0) or not np.all(y == np.floor(y)):
            raise DataError("poisson response must be non-negative integer counts")

    def null_eta(self, y):
        mean = float(np.mean(y))
        if mean <= 0.0:
            raise DataError("poisson response is identically zero; no model can be fit")
        return float(np.log(mean))


GAUSSIAN = Gaussian()
BINOMIAL = Binomial()
POISSON = Poisson()

FAMILIES: dict[str, Family] = {
    "gaussian": GAUSSIAN,
    "binomial": BINOMIAL,
    "poisson": POISSON,
}


def resolve_family(family: str | Family) -> Family:
    """Return the Family instance for a name, passing instances through."""
    if isinstance(family, Family):
        return family
    try:
        return FAMILIES[family]
    except KeyError:
        raise DataError(
            f"unknown family {family!r}; expected one of {sorted(FAMILIES)}"
        ) from None
