"""Monte-Carlo oracle and the identity-check harness.

Every identity that the clearing analysis guarantees is checked
numerically here: budget, kernel bounds, pointwise market clearing, the
martingale property of the price, terminal conditions, risk-aversion
limits, solver cross-agreement, monotonicity of the budget ratio, and
the kernel's kappa-derivative.  Check failures are reported as data,
not raised.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .clearing_solver import (
    ClearingSolution,
    _log_budget_g,
    _log_inverse_marginal,
    _log_z_generic,
    solve_kappa_hat,
    solve_kappa_small_eta,
    solve_log_z,
)
from .economy import (
    DerivedConstants,
    EconomyParams,
    conditional_law,
    derive_constants,
    h_quantiles,
    log_ell_tilt,
    phi_V,
    vartheta,
)
from .equilibrium import (
    consistent_signal_pair,
    log_kernel_Lambda,
    market_clearing_residual,
    price,
    price_limit_large_eta,
    price_limit_small_eta,
    risk_neutral_price,
    wealth_profile,
)
from .preferences import crra, weighted_risk_tolerance
from .special_math import DEFAULT_QUAD_ORDER, GaussianLaw, QuadratureRule, gauss_hermite

_MIN_ESS = 100.0
_CHECK_ETAS = (0.5, 1.0, 5.0)
_CHECK_QUANTILES = (0.1, 0.5, 0.9)


@dataclass(frozen=True)
class McConfig:
    """Monte-Carlo settings: path count, seed, antithetic flag.

    The generator is numpy's PCG64, seeded explicitly, so every estimate
    is bit-reproducible for a given configuration.
    """

    n_paths: int = 1_000_000
    seed: int = 12345
    antithetic: bool = False

    def __post_init__(self):
        if self.n_paths < 10_000:
            raise ValueError("n_paths must be at least 10^4")


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    value: float
    tolerance: float
    passed: bool
    std_error: Optional[float] = None


@dataclass
class VerificationReport:
    """One row per check id, plus per-cell detail values."""

    entries: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(entry.passed for entry in self.entries)

    def format_table(self) -> str:
        lines = []
        for e in self.entries:
            line = (
                f"{e.check_id:<8} {e.value: .6e} {e.tolerance: .6e} "
                f"{'PASS' if e.passed else 'FAIL'}"
            )
            if e.std_error is not None:
                line += f" se={e.std_error:.3e}"
            lines.append(line)
        return "\n".join(lines)


def _normal_draws(rng: np.random.Generator, n: int, antithetic: bool) -> np.ndarray:
    if not antithetic:
        return rng.standard_normal(n)
    half = (n + 1) // 2
    z = rng.standard_normal(half)
    return np.concatenate([z, -z])[:n]


def mc_price(
    t: float,
    x: float,
    h: float,
    cs: ClearingSolution,
    p: EconomyParams,
    d: DerivedConstants,
    cfg: McConfig,
) -> tuple[float, float]:
    """Self-normalized importance-sampling price estimate and its SE.

    Terminal factor values are drawn from the conditional Gaussian and
    reweighted by z times the signal tilt; the standard error is the
    delta-method error of the weighted-ratio estimator.  Raises when the
    effective sample size drops below 100.
    """
    law = conditional_law(t, x, p)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    draws = _normal_draws(rng, cfg.n_paths, cfg.antithetic)
    xt = law.mean + law.std * draws
    log_w = cs.log_z(xt) + log_ell_tilt(xt, h, d)
    w = np.exp(log_w - log_w.max())
    sw = w.sum()
    ess = sw * sw / np.dot(w, w)
    if ess < _MIN_ESS:
        raise RuntimeError(
            f"effective sample size {ess:.1f} < {_MIN_ESS:.0f}: unreliable estimate"
        )
    payoff = np.exp(xt)
    estimate = float(np.dot(w, payoff) / sw)
    se = float(np.sqrt(np.dot(w * w, (payoff - estimate) ** 2)) / sw)
    return estimate, se


def _lambda_vec(t, ys, h, cs, d, p, rule):
    """Kernel exponent Lambda at a vector of time-t states (t < T)."""
    tau = p.T - t
    drift = (p.mu_X - 0.5 * p.sigma_X**2) * tau
    std = p.sigma_X * np.sqrt(tau)
    xT = ys[:, None] + drift + std * rule.nodes[None, :]
    flat = xT.ravel()
    expo = (cs.log_z(flat) + log_ell_tilt(flat, h, d)).reshape(xT.shape)
    return logsumexp(rule.log_weights[None, :] + expo, axis=1)


def _price_vec(t, ys, h, cs, d, p, rule):
    """Equilibrium price at a vector of time-t states (t < T)."""
    tau = p.T - t
    drift = (p.mu_X - 0.5 * p.sigma_X**2) * tau
    std = p.sigma_X * np.sqrt(tau)
    xT = ys[:, None] + drift + std * rule.nodes[None, :]
    flat = xT.ravel()
    expo = (cs.log_z(flat) + log_ell_tilt(flat, h, d)).reshape(xT.shape)
    base = rule.log_weights[None, :] + expo
    return np.exp(logsumexp(base + xT, axis=1) - logsumexp(base, axis=1))


def tower_price_quadrature(
    t: float,
    h: float,
    cs: ClearingSolution,
    d: DerivedConstants,
    p: EconomyParams,
    rule: QuadratureRule,
) -> float:
    """E[S(t, X_t, h)] under the pricing measure, by nested quadrature.

    The time-t pricing-measure density is the physical Gaussian for X_t
    reweighted by exp(Lambda(t, y, h) - Lambda(0, x0, h)); the martingale
    property says the result equals S(0, x0, h).
    """
    b = p.mu_X - 0.5 * p.sigma_X**2
    law_t = GaussianLaw(p.x0 + b * t, p.sigma_X**2 * t)
    ys = law_t.mean + law_t.std * rule.nodes
    lam = _lambda_vec(t, ys, h, cs, d, p, rule)
    prices = _price_vec(t, ys, h, cs, d, p, rule)
    lam0 = log_kernel_Lambda(0.0, p.x0, h, cs, d, p, rule)
    return float(np.exp(logsumexp(rule.log_weights + lam + np.log(prices)) - lam0))


def tower_price_mc(
    t: float,
    h: float,
    cs: ClearingSolution,
    d: DerivedConstants,
    p: EconomyParams,
    rule: QuadratureRule,
    cfg: McConfig,
) -> tuple[float, float]:
    """E[S(t, X_t, h)] under the pricing measure, by joint-path MC.

    Draws (X_t, X_T) jointly, weights each path by z(X_T) times the
    signal tilt, and averages the interim price S(t, X_t).
    """
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    n = cfg.n_paths
    b = p.mu_X - 0.5 * p.sigma_X**2
    z1 = _normal_draws(rng, n, cfg.antithetic)
    z2 = rng.standard_normal(n)
    xt = p.x0 + b * t + p.sigma_X * np.sqrt(t) * z1
    xT = xt + b * (p.T - t) + p.sigma_X * np.sqrt(p.T - t) * z2
    log_w = cs.log_z(xT) + log_ell_tilt(xT, h, d)
    w = np.exp(log_w - log_w.max())
    sw = w.sum()
    prices = np.empty(n)
    chunk = 20_000
    for start in range(0, n, chunk):
        prices[start : start + chunk] = _price_vec(
            t, xt[start : start + chunk], h, cs, d, p, rule
        )
    estimate = float(np.dot(w, prices) / sw)
    se = float(np.sqrt(np.dot(w * w, (prices - estimate) ** 2)) / sw)
    return estimate, se


def run_full_verification(
    p: EconomyParams, cfg: Optional[McConfig] = None
) -> VerificationReport:
    """Run every CHK identity for an economy; failures are data.

    Checks run across the h-quantiles {0.1, 0.5, 0.9} and uninformed
    risk aversions {0.5, 1, 5}; each check id is reported once with its
    worst case over that grid (per-cell values in report.details).
    """
    if cfg is None:
        cfg = McConfig()
    d = derive_constants(p)
    rule = gauss_hermite(DEFAULT_QUAD_ORDER)
    hs = [float(h) for h in h_quantiles(d, _CHECK_QUANTILES)]
    solutions = {}
    for eta in _CHECK_ETAS:
        spec = crra(eta)
        for h in hs:
            solutions[(eta, h)] = solve_kappa_hat(h, spec, d, p, rule)

    report = VerificationReport()
    _chk_budget(report, solutions, d, p, rule, cfg)
    _chk_bounds(report, solutions, d, p)
    _chk_pointwise_clearing(report, solutions, d, p, rule)
    _chk_tower(report, solutions, d, p, rule, cfg)
    _chk_terminal(report, solutions, d, p, rule)
    _chk_limits(report, d, p, rule, hs)
    _chk_limit_vs_risk_neutral(report, d, p, rule)
    _chk_solver_agreement(report, d, p, hs)
    _chk_g_monotone(report, d, p, rule, hs)
    _chk_kappa_derivative(report, solutions, d, p)
    return report


def _chk_budget(report, solutions, d, p, rule, cfg):
    worst = 0.0
    for (eta, h), cs in solutions.items():
        worst = max(worst, abs(cs.budget_residual))
        report.details[f"budget[{eta:g},{h:.4f}]"] = cs.budget_residual
    report.entries.append(CheckResult("CHK-1", worst, 1e-8, worst <= 1e-8))
    # MC arm: pricing-measure budget ratio at the stiffest risk aversion
    worst_dev = 0.0
    worst_se = 0.0
    for h in sorted({h for (_, h) in solutions}):
        cs = solutions[(5.0, h)]
        rng = np.random.Generator(np.random.PCG64(cfg.seed))
        law = d.lawXT
        xt = law.mean + law.std * _normal_draws(rng, cfg.n_paths, cfg.antithetic)
        log_z = cs.log_z(xt)
        log_w = log_z + log_ell_tilt(xt, h, d)
        w = np.exp(log_w - log_w.max())
        a = p.pi0_U * np.exp(xt)
        b = np.exp(_log_inverse_marginal(log_z, cs.spec))
        ratio = float(np.dot(w, a) / np.dot(w, b))
        se = float(np.sqrt(np.dot(w * w, (a - ratio * b) ** 2)) / np.dot(w, b))
        worst_dev = max(worst_dev, abs(ratio - 1.0) / max(se, 1e-300))
        worst_se = max(worst_se, se)
    report.entries.append(
        CheckResult("CHK-1mc", worst_dev, 4.0, worst_dev <= 4.0, std_error=worst_se)
    )


def _chk_bounds(report, solutions, d, p):
    worst = -np.inf
    law = d.lawXT
    x = np.linspace(law.mean - 5 * law.std, law.mean + 5 * law.std, 101)
    for (eta, h), cs in solutions.items():
        log_z = cs.log_z(x)
        phi, _ = phi_V(x, h, d, p)
        log_zt = cs.log_z_tilde
        upper_excess = float(np.max(log_z - log_zt))
        lower_excess = float(np.max((log_zt - phi) - log_z))
        iz = np.exp(_log_inverse_marginal(log_z, cs.spec))
        iz_t = np.exp(_log_inverse_marginal(np.full_like(x, log_zt), cs.spec))
        wealth_excess = float(np.max(iz - (iz_t + d.alpha_sum / p.omega_U * phi)))
        worst = max(worst, upper_excess, lower_excess, wealth_excess)
    report.entries.append(CheckResult("CHK-2", worst, 1e-9, worst <= 1e-9))


def _chk_pointwise_clearing(report, solutions, d, p, rule):
    worst = 0.0
    law = d.lawXT
    x = law.mean + law.std * rule.nodes
    for (eta, h), cs in solutions.items():
        g, g_N = consistent_signal_pair(h, d, p)
        wp = wealth_profile(h, g, g_N, cs, d, p, rule)
        s0 = price(0.0, p.x0, h, cs, d, p, rule)
        gap = market_clearing_residual(wp, s0, x, p)
        scaled = float(np.max(np.abs(gap) / np.maximum(1.0, p.Pi * np.exp(x))))
        report.details[f"clearing[{eta:g},{h:.4f}]"] = scaled
        worst = max(worst, scaled)
    report.entries.append(CheckResult("CHK-3", worst, 1e-7, worst <= 1e-7))


def _chk_tower(report, solutions, d, p, rule, cfg):
    worst = 0.0
    for (eta, h), cs in solutions.items():
        s0 = price(0.0, p.x0, h, cs, d, p, rule)
        for t in (0.25, 0.5, 0.75):
            towered = tower_price_quadrature(t, h, cs, d, p, rule)
            rel = abs(towered / s0 - 1.0)
            report.details[f"tower[{eta:g},{h:.4f},{t}]"] = rel
            worst = max(worst, rel)
    report.entries.append(CheckResult("CHK-4", worst, 1e-6, worst <= 1e-6))
    # MC arm at the stiffest risk aversion, mid horizon
    mc_cfg = McConfig(
        n_paths=max(10_000, cfg.n_paths // 5), seed=cfg.seed, antithetic=cfg.antithetic
    )
    worst_dev = 0.0
    worst_se = 0.0
    for h in sorted({h for (_, h) in solutions}):
        cs = solutions[(5.0, h)]
        s0 = price(0.0, p.x0, h, cs, d, p, rule)
        est, se = tower_price_mc(0.5, h, cs, d, p, rule, mc_cfg)
        worst_dev = max(worst_dev, abs(est - s0) / max(se, 1e-300))
        worst_se = max(worst_se, se)
    report.entries.append(
        CheckResult("CHK-4mc", worst_dev, 4.0, worst_dev <= 4.0, std_error=worst_se)
    )


def _chk_terminal(report, solutions, d, p, rule):
    worst = 0.0
    xs = np.linspace(-2.0, 2.0, 9)
    for (eta, h), cs in solutions.items():
        for x in xs:
            s = price(p.T, float(x), h, cs, d, p, rule)
            worst = max(worst, abs(s - np.exp(x)) / max(1.0, np.exp(x)))
    report.entries.append(CheckResult("CHK-5", worst, 1e-10, worst <= 1e-10))


def _chk_limits(report, d, p, rule, hs):
    worst = 0.0
    for h in hs:
        cs_big = solve_kappa_hat(h, crra(1e4), d, p, rule)
        s_big = price(0.0, p.x0, h, cs_big, d, p, rule)
        s_inf = price_limit_large_eta(0.0, p.x0, h, d, p, rule)
        big_gap = abs(s_big / s_inf - 1.0)
        cs_small = solve_kappa_hat(h, crra(1e-3), d, p, rule)
        s_small = price(0.0, p.x0, h, cs_small, d, p, rule)
        kappa0 = solve_kappa_small_eta(h, d, p, rule)
        s_zero = price_limit_small_eta(0.0, p.x0, h, kappa0, d, p, rule)
        small_gap = abs(s_small / s_zero - 1.0)
        report.details[f"limits[{h:.4f}]"] = (big_gap, small_gap)
        worst = max(worst, big_gap, small_gap)
    report.entries.append(CheckResult("CHK-6", worst, 1e-2, worst <= 1e-2))


def _chk_limit_vs_risk_neutral(report, d, p, rule):
    # The vanishing-risk-aversion price coincides with the risk-neutral
    # price exactly when the limit kernel is trivial, i.e. vartheta +
    # kappa0 stays nonnegative on the whole support.  The check passes
    # when a gap beyond 1e-3 is exhibited somewhere, or when no gap
    # exists AND the kernel is verifiably trivial at every scanned h
    # (so the coincidence is explained, not a numerical accident).
    law = d.lawXT
    x = law.mean + law.std * rule.nodes

    def gap_at(q):
        h = float(h_quantiles(d, (q,))[0])
        kappa0 = solve_kappa_small_eta(h, d, p, rule)
        s_zero = price_limit_small_eta(0.0, p.x0, h, kappa0, d, p, rule)
        s_rn = risk_neutral_price(0.0, p.x0, h, d, p, rule)
        shift_min = float(np.min(vartheta(x, h, d, p) + kappa0))
        return abs(s_zero - s_rn), shift_min

    results = [gap_at(q) for q in (0.1, 0.5, 0.9)]
    if max(g for g, _ in results) <= 1e-3:
        results += [gap_at(q) for q in np.linspace(0.01, 0.99, 50)]
    gap = max(g for g, _ in results)
    trivial_everywhere = all(s >= -1e-9 for _, s in results)
    report.details["rn_gap"] = gap
    report.details["rn_kernel_trivial"] = trivial_everywhere
    passed = gap > 1e-3 or trivial_everywhere
    report.entries.append(CheckResult("CHK-7", gap, 1e-3, passed))


def _chk_solver_agreement(report, d, p, hs):
    worst = 0.0
    xs = np.linspace(-3.0, 3.0, 21)
    kappas = np.linspace(-3.0, 3.0, 5)
    for eta in _CHECK_ETAS:
        spec = crra(eta)
        generic = dataclasses.replace(spec, crra_eta=None, name="crra-as-generic")
        for h in hs:
            for kappa in kappas:
                closed = solve_log_z(xs, h, float(kappa), spec, d, p)
                rhs = vartheta(xs, h, d, p) + kappa
                bis = _log_z_generic(rhs, generic, d, p)
                rel = np.abs(closed - bis) / np.maximum(1.0, np.abs(closed))
                worst = max(worst, float(np.max(rel)))
    report.entries.append(CheckResult("CHK-8", worst, 1e-9, worst <= 1e-9))


def _chk_g_monotone(report, d, p, rule, hs):
    worst_increase = -np.inf
    kappas = np.linspace(-8.0, 8.0, 64)
    for eta in (0.5, 1.0):
        spec = crra(eta)
        for h in hs:
            log_g = np.array(
                [_log_budget_g(float(k), h, spec, d, p, rule) for k in kappas]
            )
            worst_increase = max(worst_increase, float(np.diff(log_g).max()))
    report.entries.append(
        CheckResult("CHK-9", worst_increase, 0.0, worst_increase < 0.0)
    )


def _chk_kappa_derivative(report, solutions, d, p):
    worst = 0.0
    delta = 1e-5
    xs = np.linspace(-2.0, 2.0, 11)
    for (eta, h), cs in solutions.items():
        spec = cs.spec
        k = cs.kappa_hat
        lz_plus = solve_log_z(xs, h, k + delta, spec, d, p)
        lz_minus = solve_log_z(xs, h, k - delta, spec, d, p)
        fd = (lz_plus - lz_minus) / (2.0 * delta)
        wealth = np.exp(_log_inverse_marginal(cs.log_z(xs), spec))
        alpha_u = np.array(
            [weighted_risk_tolerance(spec, p.omega_U, float(w)) for w in wealth]
        )
        analytic = -1.0 / (alpha_u + d.alpha_sum)
        worst = max(worst, float(np.max(np.abs(fd - analytic))))
    report.entries.append(CheckResult("CHK-10", worst, 1e-5, worst <= 1e-5))
