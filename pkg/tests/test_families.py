import numpy as np
import pytest

from reluctant_gam.errors import DataError
from reluctant_gam.families import (
    BINOMIAL,
    FAMILIES,
    GAUSSIAN,
    POISSON,
    resolve_family,
)


def test_resolve_family():
    assert resolve_family("gaussian") is GAUSSIAN
    assert resolve_family(BINOMIAL) is BINOMIAL
    with pytest.raises(DataError):
        resolve_family("gamma")
    assert sorted(FAMILIES) == ["binomial", "gaussian", "poisson"]


def test_gaussian_identities():
    rng = np.random.default_rng(0)
    mu = rng.standard_normal(20)
    y = rng.standard_normal(20)
    assert np.array_equal(GAUSSIAN.link(mu), mu)
    assert np.array_equal(GAUSSIAN.inverse_link(mu), mu)
    assert np.array_equal(GAUSSIAN.variance(mu), np.ones(20))
    assert np.allclose(GAUSSIAN.unit_deviance(y, mu), (y - mu) ** 2)
    assert GAUSSIAN.null_eta(y) == pytest.approx(float(np.mean(y)))


def test_binomial_link_round_trip():
    rng = np.random.default_rng(1)
    p = rng.uniform(0.01, 0.99, size=50)
    eta = BINOMIAL.link(p)
    back = BINOMIAL.inverse_link(eta)
    assert np.max(np.abs(back - p)) < 1e-12
    assert np.allclose(BINOMIAL.variance(p), p * (1 - p))


def test_binomial_sigmoid_extremes():
    # large |eta| must not overflow and must saturate cleanly
    out = BINOMIAL.inverse_link(np.array([-1000.0, 0.0, 1000.0]))
    assert out[0] == 0.0
    assert out[1] == 0.5
    assert out[2] == 1.0


def test_binomial_deviance_hand_value():
    # -2 log(1/2) per observation when the model says 1/2
    y = np.array([0.0, 1.0, 1.0, 0.0])
    mu = np.full(4, 0.5)
    dev = BINOMIAL.unit_deviance(y, mu)
    assert np.allclose(dev, 2.0 * np.log(2.0))


def test_binomial_validation():
    BINOMIAL.validate_response(np.array([0.0, 1.0, 1.0]))
    with pytest.raises(DataError):
        BINOMIAL.validate_response(np.array([0.0, 0.5]))
    with pytest.raises(DataError):
        BINOMIAL.null_eta(np.zeros(5))
    assert BINOMIAL.null_eta(np.array([0.0, 1.0, 1.0, 1.0])) == pytest.approx(
        np.log(3.0)
    )


def test_poisson_identities():
    y = np.array([0.0, 1.0, 4.0, 2.0])
    mu = np.array([0.5, 1.5, 3.0, 2.0])
    assert np.allclose(POISSON.link(mu), np.log(mu))
    assert np.allclose(POISSON.inverse_link(np.log(mu)), mu)
    assert np.allclose(POISSON.variance(mu), mu)
    # deviance of a perfect fit is zero, including at y = 0
    assert np.allclose(POISSON.unit_deviance(y, np.maximum(y, 1e-12)), 0.0, atol=1e-9)
    # hand value: y=0, mu=2 -> 2*(0 - (0 - 2)) = 4
    assert POISSON.unit_deviance(np.array([0.0]), np.array([2.0]))[0] == pytest.approx(4.0)
    assert POISSON.null_eta(y) == pytest.approx(np.log(np.mean(y)))


def test_poisson_validation():
    POISSON.validate_response(np.array([0.0, 3.0, 1.0]))
    with pytest.raises(DataError):
        POISSON.validate_response(np.array([-1.0, 2.0]))
    with pytest.raises(DataError):
        POISSON.validate_response(np.array([1.5, 2.0]))
    with pytest.raises(DataError):
        POISSON.null_eta(np.zeros(4))
