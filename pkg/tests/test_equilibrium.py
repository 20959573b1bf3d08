"""Tests for prices, Greeks, limits, and the wealth decomposition."""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from artifact import (
    ClearingSolution,
    EquilibriumPoint,
    SolverStats,
    baseline_params,
    conditional_law,
    consistent_signal_pair,
    crra,
    derive_constants,
    equilibrium_point,
    gauss_hermite,
    h_quantiles,
    log_kernel_Lambda,
    market_clearing_residual,
    market_price_of_risk,
    price,
    price_limit_large_eta,
    price_limit_small_eta,
    risk_neutral_price,
    risk_neutral_price_closed,
    solve_kappa_hat,
    solve_kappa_small_eta,
    tilted_gaussian,
    volatility,
    wealth_profile,
)

RULE = gauss_hermite(100)


def _baseline():
    p = baseline_params()
    return p, derive_constants(p)


def _solved(h=0.055, eta=5.0, p=None, d=None):
    if p is None:
        p, d = _baseline()
    return solve_kappa_hat(h, crra(eta), d, p, RULE)


def _unit_kernel(h, spec):
    """A hand-built solution with z identically one (pure signal tilt)."""
    zeros = lambda x: np.zeros_like(np.asarray(x, dtype=np.float64))
    ones = lambda x: np.ones_like(np.asarray(x, dtype=np.float64))
    return ClearingSolution(
        h=h,
        kappa_hat=0.0,
        z=ones,
        log_z=zeros,
        z_tilde=1.0,
        log_z_tilde=0.0,
        budget_residual=0.0,
        solver_stats=SolverStats(0, 0.0, 0.0, 0),
        spec=spec,
    )


class TestTerminal:
    def test_price_is_payoff(self):
        p, d = _baseline()
        cs = _solved()
        for x in (-1.0, 0.0, 0.4):
            assert price(p.T, x, 0.055, cs, d, p, RULE) == pytest.approx(np.exp(x))

    def test_volatility_is_payoff_slope(self):
        p, d = _baseline()
        cs = _solved()
        assert volatility(p.T, 0.4, 0.055, cs, d, p, RULE) == pytest.approx(
            p.sigma_X * np.exp(0.4)
        )

    def test_Lambda_degenerates(self):
        p, d = _baseline()
        cs = _solved()
        from artifact import log_ell_tilt

        got = log_kernel_Lambda(p.T, 0.2, 0.055, cs, d, p, RULE)
        assert got == pytest.approx(cs.log_z(0.2) + log_ell_tilt(0.2, 0.055, d), rel=1e-12)


class TestRiskNeutral:
    def test_closed_form_vs_quadrature(self):
        p, d = _baseline()
        for t, x, h in [(0.0, 0.0, 0.055), (0.5, -0.3, 0.6), (0.9, 0.2, -0.5)]:
            quad = risk_neutral_price(t, x, h, d, p, RULE)
            closed = risk_neutral_price_closed(t, x, h, d, p)
            assert abs(quad - closed) <= 1e-10 * max(1.0, abs(closed))

    def test_known_value(self):
        # at the baseline median signal the tilted mean reduces to x0 and
        # the price is exp(mu_X * T - var_shrink/2) = e^0.08
        p, d = _baseline()
        assert risk_neutral_price(0.0, 0.0, 0.055, d, p, RULE) == pytest.approx(
            1.0832870676749586, rel=1e-12
        )

    def test_coarse_rule_rejected(self):
        p, d = _baseline()
        with pytest.raises(RuntimeError, match="quadrature"):
            risk_neutral_price(0.0, 0.0, 0.055, d, p, gauss_hermite(5))


class TestUnitKernel:
    """With z = 1 everything has a tilted-Gaussian closed form."""

    def test_price(self):
        p, d = _baseline()
        cs = _unit_kernel(0.4, crra(1.0))
        for t, x in [(0.0, 0.0), (0.3, -0.2), (0.8, 0.5)]:
            got = price(t, x, 0.4, cs, d, p, RULE)
            assert got == pytest.approx(risk_neutral_price_closed(t, x, 0.4, d, p), rel=1e-10)

    def test_volatility(self):
        p, d = _baseline()
        h = 0.4
        cs = _unit_kernel(h, crra(1.0))
        t, x = 0.3, -0.2
        law = conditional_law(t, x, p)
        tilted = tilted_gaussian(law, d.P_U, d.P_U * h)
        s = risk_neutral_price_closed(t, x, h, d, p)
        expected = p.sigma_X * s * tilted.variance / law.variance
        assert volatility(t, x, h, cs, d, p, RULE) == pytest.approx(expected, rel=1e-8)

    def test_mpr(self):
        p, d = _baseline()
        h = 0.4
        cs = _unit_kernel(h, crra(1.0))
        t, x = 0.3, -0.2
        law = conditional_law(t, x, p)
        tilted = tilted_gaussian(law, d.P_U, d.P_U * h)
        expected = -p.sigma_X * (tilted.mean - law.mean) / law.variance
        assert market_price_of_risk(t, x, h, cs, d, p, RULE) == pytest.approx(
            expected, rel=1e-8
        )


class TestPricePath:
    def test_known_point_values(self):
        p, d = _baseline()
        qs = h_quantiles(d)
        cs = _solved(float(qs[1]))
        assert price(0.0, 0.0, cs.h, cs, d, p, RULE) == pytest.approx(0.928808037679, rel=1e-9)
        assert volatility(0.0, 0.0, cs.h, cs, d, p, RULE) == pytest.approx(
            0.126036944784, rel=1e-6
        )
        assert market_price_of_risk(0.0, 0.0, cs.h, cs, d, p, RULE) == pytest.approx(
            0.497378650373, rel=1e-6
        )

    def test_price_drift_matches_mpr(self):
        """Ito drift of S(t, X_t) equals volatility times the price of risk."""
        p, d = _baseline()
        cs = _solved()
        t, x, h = 0.3, 0.1, 0.055
        dt, dx = 1e-4, 1e-3

        def S(tt, xx):
            return price(tt, xx, h, cs, d, p, RULE)

        s_t = (S(t + dt, x) - S(t - dt, x)) / (2 * dt)
        s_x = (S(t, x + dx) - S(t, x - dx)) / (2 * dx)
        s_xx = (S(t, x + dx) - 2 * S(t, x) + S(t, x - dx)) / dx**2
        b = p.mu_X - 0.5 * p.sigma_X**2
        drift = s_t + b * s_x + 0.5 * p.sigma_X**2 * s_xx
        vol = volatility(t, x, h, cs, d, p, RULE)
        mpr = market_price_of_risk(t, x, h, cs, d, p, RULE)
        assert drift == pytest.approx(vol * mpr, abs=1e-3)

    def test_price_increasing_in_x(self):
        p, d = _baseline()
        cs = _solved()
        xs = np.linspace(-1.0, 1.0, 9)
        prices = [price(0.0, float(x), cs.h, cs, d, p, RULE) for x in xs]
        assert np.all(np.diff(prices) > 0)


class TestLimits:
    def test_large_eta_known_value(self):
        p, d = _baseline()
        got = price_limit_large_eta(0.0, 0.0, 0.055, d, p, RULE)
        assert got == pytest.approx(0.897810302047, rel=1e-9)

    def test_small_eta_known_value(self):
        p, d = _baseline()
        kappa0 = solve_kappa_small_eta(0.055, d, p, RULE)
        got = price_limit_small_eta(0.0, 0.0, 0.055, kappa0, d, p, RULE)
        assert got == pytest.approx(1.08111307364, rel=1e-9)

    def test_finite_eta_lands_between(self):
        """Rising risk aversion pushes the price from S0 toward S_inf."""
        p, d = _baseline()
        h = 0.055
        lo = price_limit_large_eta(0.0, 0.0, h, d, p, RULE)
        kappa0 = solve_kappa_small_eta(h, d, p, RULE)
        hi = price_limit_small_eta(0.0, 0.0, h, kappa0, d, p, RULE)
        s5 = price(0.0, 0.0, h, _solved(h, 5.0), d, p, RULE)
        assert lo < s5 < hi

    def test_extremes_approach_limits(self):
        p, d = _baseline()
        h = 0.055
        big = price(0.0, 0.0, h, _solved(h, 1e4, p, d), d, p, RULE)
        assert big == pytest.approx(price_limit_large_eta(0.0, 0.0, h, d, p, RULE), abs=1e-2)
        small = price(0.0, 0.0, h, _solved(h, 1e-3, p, d), d, p, RULE)
        kappa0 = solve_kappa_small_eta(h, d, p, RULE)
        assert small == pytest.approx(
            price_limit_small_eta(0.0, 0.0, h, kappa0, d, p, RULE), abs=1e-2
        )


class TestEquilibriumPoint:
    def test_fields_match_components(self):
        p, d = _baseline()
        cs = _solved()
        pt = equilibrium_point(0.0, 0.0, cs.h, cs, d, p, RULE)
        assert pt.price == price(0.0, 0.0, cs.h, cs, d, p, RULE)
        assert pt.volatility == volatility(0.0, 0.0, cs.h, cs, d, p, RULE)
        assert pt.mpr == market_price_of_risk(0.0, 0.0, cs.h, cs, d, p, RULE)
        assert not pt.quad_flag

    def test_coarse_rule_flags(self):
        p, d = _baseline()
        cs = _solved()
        pt = equilibrium_point(0.0, 0.0, cs.h, cs, d, p, gauss_hermite(8), check_rule=RULE)
        assert pt.quad_flag

    def test_nonpositive_price_rejected(self):
        with pytest.raises(ValueError):
            EquilibriumPoint(t=0.0, x=0.0, h=0.0, price=0.0, volatility=0.1, mpr=0.0, quad_flag=False)


class TestWealths:
    @pytest.mark.parametrize("delta", [0.0, 0.3])
    def test_signal_pair_aggregates(self, delta):
        p, d = _baseline()
        g, g_N = consistent_signal_pair(0.4, d, p, delta)
        assert g == pytest.approx(0.4 + delta)
        lhs = d.alpha_I * g + d.alpha_N * g_N
        rhs = (d.alpha_I + d.alpha_N * p.tau_N) * 0.4 + d.alpha_N * p.mu_N
        assert lhs == pytest.approx(rhs, abs=1e-14)

    def test_budget_and_zero_cost(self):
        """Informed gains price to zero, the uninformed to initial wealth."""
        from artifact import log_ell_tilt
        from scipy.special import logsumexp

        p, d = _baseline()
        cs = _solved()
        g, g_N = consistent_signal_pair(cs.h, d, p)
        wp = wealth_profile(cs.h, g, g_N, cs, d, p, RULE)
        xq = d.lawXT.mean + d.lawXT.std * RULE.nodes
        log_q = RULE.log_weights + cs.log_z(xq) + log_ell_tilt(xq, cs.h, d)
        qh = np.exp(log_q - logsumexp(log_q))
        qh /= qh.sum()
        assert abs(float(np.dot(qh, wp.w_I(xq)))) < 1e-12
        assert abs(float(np.dot(qh, wp.w_N(xq)))) < 1e-12
        assert float(np.dot(qh, wp.w_U(xq))) == pytest.approx(wp.w0_U, rel=1e-8)
        assert wp.w0_U == pytest.approx(p.pi0_U * price(0.0, p.x0, cs.h, cs, d, p, RULE))

    @pytest.mark.parametrize("delta", [0.0, 0.3])
    def test_pointwise_clearing(self, delta):
        """Aggregate gains match the supply gain at every terminal value."""
        p, d = _baseline()
        cs = _solved()
        g, g_N = consistent_signal_pair(cs.h, d, p, delta)
        wp = wealth_profile(cs.h, g, g_N, cs, d, p, RULE)
        price0 = price(0.0, p.x0, cs.h, cs, d, p, RULE)
        x = np.linspace(-1.5, 1.5, 61)
        resid = market_clearing_residual(wp, price0, x, p)
        scale = np.maximum(1.0, p.Pi * np.exp(x))
        assert np.max(np.abs(resid) / scale) < 1e-7

    def test_uninformed_wealth_positive(self):
        p, d = _baseline()
        cs = _solved()
        g, g_N = consistent_signal_pair(cs.h, d, p)
        wp = wealth_profile(cs.h, g, g_N, cs, d, p, RULE)
        x = np.linspace(-2.0, 2.0, 41)
        assert np.all(wp.w_U(x) > 0)
