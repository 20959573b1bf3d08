"""Tests for the utility abstraction."""
import numpy as np
import pytest

from artifact import UtilitySpec, crra, weighted_risk_tolerance


@pytest.mark.parametrize("eta", [0.3, 0.5, 1.0, 2.0, 5.0, 50.0])
def test_marginal_inverse_roundtrip(eta):
    spec = crra(eta)
    w = np.logspace(-3, 3, 200)
    np.testing.assert_allclose(spec.inverse_marginal(spec.marginal(w)), w, rtol=1e-12)
    y = np.logspace(-4, 4, 200)
    np.testing.assert_allclose(spec.marginal(spec.inverse_marginal(y)), y, rtol=1e-12)


def test_marginal_is_decreasing():
    spec = crra(2.5)
    w = np.linspace(0.1, 10.0, 500)
    assert np.all(np.diff(spec.marginal(w)) < 0)


@pytest.mark.parametrize("eta", [0.7, 1.0, 4.0])
def test_risk_aversion_matches_utility_curvature(eta):
    """-u''/u' computed by finite differences agrees with eta/w."""
    spec = crra(eta)
    for w in (0.2, 1.0, 7.3):
        dw = 1e-5 * w
        up = (spec.u(w + dw) - spec.u(w - dw)) / (2 * dw)
        upp = (spec.u(w + dw) - 2 * spec.u(w) + spec.u(w - dw)) / dw**2
        assert -upp / up == pytest.approx(spec.risk_aversion(w), rel=1e-4)
        assert up == pytest.approx(spec.marginal(w), rel=1e-8)


def test_log_utility_at_eta_one():
    spec = crra(1.0)
    assert spec.u(1.0) == 0.0
    assert spec.u(np.e) == pytest.approx(1.0)
    assert spec.marginal(2.0) == pytest.approx(0.5)


def test_unique_kappa_flag_boundary():
    # w * u'(w) = w^(1-eta) is non-decreasing exactly when eta <= 1
    assert crra(0.5).has_unique_kappa
    assert crra(1.0).has_unique_kappa
    assert not crra(1.0 + 1e-12).has_unique_kappa
    assert not crra(5.0).has_unique_kappa


def test_crra_eta_recorded():
    assert crra(5).crra_eta == 5.0
    assert crra(5).name == "crra(5)"


def test_invalid_eta():
    with pytest.raises(ValueError):
        crra(0.0)
    with pytest.raises(ValueError):
        crra(-2.0)


def test_weighted_risk_tolerance():
    spec = crra(5.0)
    # omega_U / (eta/w) = omega_U * w / eta
    assert weighted_risk_tolerance(spec, 1.0 / 3.0, 1.0) == pytest.approx(1.0 / 15.0)
    assert weighted_risk_tolerance(spec, 0.5, 3.0) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        weighted_risk_tolerance(spec, 0.5, 0.0)
    with pytest.raises(ValueError):
        weighted_risk_tolerance(spec, 0.5, -1.0)


def test_custom_spec_carries_through():
    """A hand-rolled exponential utility plugs into the same interface."""
    gamma = 2.0
    spec = UtilitySpec(
        marginal=lambda w: np.exp(-gamma * w),
        inverse_marginal=lambda y: -np.log(y) / gamma,
        risk_aversion=lambda w: gamma,
        has_unique_kappa=False,
        name="cara(2)",
    )
    assert spec.crra_eta is None
    assert spec.inverse_marginal(spec.marginal(0.7)) == pytest.approx(0.7)
    assert weighted_risk_tolerance(spec, 0.25, 10.0) == pytest.approx(0.125)
