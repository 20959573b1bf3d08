"""Tests for the Monte-Carlo cross-checks and the identity report."""
import numpy as np
import pytest

from artifact import (
    CheckResult,
    McConfig,
    VerificationReport,
    baseline_params,
    crra,
    derive_constants,
    gauss_hermite,
    independent_noise_params,
    mc_price,
    price,
    run_full_verification,
    solve_kappa_hat,
    tower_price_mc,
    tower_price_quadrature,
)

RULE = gauss_hermite(100)

EXPECTED_IDS = [
    "CHK-1",
    "CHK-1mc",
    "CHK-2",
    "CHK-3",
    "CHK-4",
    "CHK-4mc",
    "CHK-5",
    "CHK-6",
    "CHK-7",
    "CHK-8",
    "CHK-9",
    "CHK-10",
]


def _solved(h=0.055, eta=5.0):
    p = baseline_params()
    d = derive_constants(p)
    return p, d, solve_kappa_hat(h, crra(eta), d, p, RULE)


class TestMcConfig:
    def test_defaults(self):
        cfg = McConfig()
        assert cfg.n_paths == 1_000_000
        assert cfg.seed == 12345
        assert not cfg.antithetic

    def test_too_few_paths(self):
        with pytest.raises(ValueError):
            McConfig(n_paths=9_999)


class TestMcPrice:
    def test_deterministic(self):
        p, d, cs = _solved()
        cfg = McConfig(n_paths=50_000, seed=777)
        a = mc_price(0.0, 0.0, cs.h, cs, p, d, cfg)
        b = mc_price(0.0, 0.0, cs.h, cs, p, d, cfg)
        assert a == b  # bit identical, same generator state

    def test_seed_changes_estimate(self):
        p, d, cs = _solved()
        a = mc_price(0.0, 0.0, cs.h, cs, p, d, McConfig(n_paths=50_000, seed=1))
        b = mc_price(0.0, 0.0, cs.h, cs, p, d, McConfig(n_paths=50_000, seed=2))
        assert a[0] != b[0]

    @pytest.mark.parametrize("antithetic", [False, True])
    def test_agrees_with_quadrature(self, antithetic):
        p, d, cs = _solved()
        cfg = McConfig(n_paths=200_000, seed=99, antithetic=antithetic)
        est, se = mc_price(0.0, 0.0, cs.h, cs, p, d, cfg)
        assert se > 0
        exact = price(0.0, 0.0, cs.h, cs, d, p, RULE)
        assert abs(est - exact) <= 4.0 * se

    def test_interior_time(self):
        p, d, cs = _solved()
        cfg = McConfig(n_paths=100_000, seed=4)
        est, se = mc_price(0.5, 0.2, cs.h, cs, p, d, cfg)
        exact = price(0.5, 0.2, cs.h, cs, d, p, RULE)
        assert abs(est - exact) <= 4.0 * se

    def test_degenerate_weights_rejected(self):
        """A far-out signal concentrates the tilt on one draw."""
        p = baseline_params()
        d = derive_constants(p)
        cs = solve_kappa_hat(30.0, crra(5.0), d, p, RULE)
        with pytest.raises(RuntimeError, match="effective sample size"):
            mc_price(0.0, 0.0, 30.0, cs, p, d, McConfig(n_paths=10_000, seed=1))


class TestTowerProperty:
    def test_quadrature(self):
        """E[S_t] under the pricing measure reproduces S_0."""
        p, d, cs = _solved()
        s0 = price(0.0, p.x0, cs.h, cs, d, p, RULE)
        for t in (0.25, 0.5, 0.75):
            nested = tower_price_quadrature(t, cs.h, cs, d, p, RULE)
            assert nested == pytest.approx(s0, rel=1e-6)

    def test_mc(self):
        p, d, cs = _solved()
        s0 = price(0.0, p.x0, cs.h, cs, d, p, RULE)
        est, se = tower_price_mc(0.5, cs.h, cs, d, p, RULE, McConfig(n_paths=50_000, seed=21))
        assert abs(est - s0) <= 4.0 * se


class TestReport:
    def test_passed_property(self):
        rep = VerificationReport()
        rep.entries.append(CheckResult("CHK-0", 0.0, 1.0, True))
        assert rep.passed
        rep.entries.append(CheckResult("CHK-X", 2.0, 1.0, False))
        assert not rep.passed

    def test_format_table(self):
        rep = VerificationReport()
        rep.entries.append(CheckResult("CHK-0", 1e-12, 1e-8, True))
        rep.entries.append(CheckResult("CHK-M", 1e-3, 1e-2, True, std_error=5e-4))
        table = rep.format_table()
        assert "CHK-0" in table
        assert "PASS" in table
        assert "se=" in table


class TestFullRun:
    def test_baseline(self):
        rep = run_full_verification(baseline_params(), McConfig(n_paths=50_000, seed=3))
        assert [e.check_id for e in rep.entries] == EXPECTED_IDS
        assert rep.passed, rep.format_table()
        # the finite-risk-aversion price differs from risk neutral here
        assert rep.details["rn_gap"] > 1e-3
        assert not rep.details["rn_kernel_trivial"]

    def test_independent_noise(self):
        """tau_N = 0 makes the small-risk-aversion kernel trivial, so the
        risk-neutral comparison passes by the nonnegativity certificate."""
        rep = run_full_verification(independent_noise_params(), McConfig(n_paths=50_000, seed=3))
        assert rep.passed, rep.format_table()
        assert rep.details["rn_kernel_trivial"]
        assert rep.details["rn_gap"] == pytest.approx(0.0, abs=1e-12)

    def test_mc_rows_carry_std_errors(self):
        rep = run_full_verification(baseline_params(), McConfig(n_paths=50_000, seed=3))
        by_id = {e.check_id: e for e in rep.entries}
        assert by_id["CHK-1mc"].std_error is not None
        assert by_id["CHK-4mc"].std_error is not None
        assert by_id["CHK-2"].std_error is None
