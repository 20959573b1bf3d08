"""Equilibrium quantities at a point (t, x, h).

The equilibrium price is the payoff expectation under the signal-and-
kernel-tilted conditional law,

    S(t, x, h) = E[Psi(X_T) z ell | X_t = x] / E[z ell | X_t = x],

with Psi(x) = e^x and the conditional law Gaussian.  The volatility is
sigma_X dS/dx and the market price of risk is -sigma_X dLambda/dx where
Lambda is the log of the kernel integral.  Both derivatives are Richardson-
extrapolated central differences.  The module also provides the prices in
the limits of exploding and vanishing uninformed risk aversion, the
risk-neutral reference price, and the agents' optimal terminal wealths.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from .clearing_solver import ClearingSolution, _log_inverse_marginal
from .economy import (
    DerivedConstants,
    EconomyParams,
    conditional_law,
    log_ell_tilt,
    vartheta,
)
from .special_math import (
    CHECK_QUAD_ORDER,
    QuadratureRule,
    gauss_hermite,
    tilted_gaussian,
)

_FD_STEP = 1e-4
_T_EPS = 1e-12
_QUAD_AGREE_RTOL = 1e-8


@dataclass(frozen=True)
class EquilibriumPoint:
    """Price, volatility, and market price of risk at (t, x, h).

    quad_flag is True when the default and doubled quadrature orders
    disagree beyond 1e-8 relative on any of the three quantities.
    """

    t: float
    x: float
    h: float
    price: float
    volatility: float
    mpr: float
    quad_flag: bool

    def __post_init__(self):
        if not self.price > 0:
            raise ValueError("equilibrium price must be positive")


@dataclass(frozen=True)
class WealthProfile:
    """Optimal terminal wealths as functions of the terminal factor value.

    w_I and w_N are the informed agents' terminal trading gains (zero
    initial cost under the pricing measure); w_U is the uninformed agent's
    terminal wealth, whose pricing-measure expectation is the initial
    wealth w0_U.
    """

    w_I: Callable
    w_N: Callable
    w_U: Callable
    w0_U: float


def _is_terminal(t: float, p: EconomyParams) -> bool:
    return t >= p.T - _T_EPS


def log_kernel_Lambda(
    t: float,
    x: float,
    h: float,
    cs: ClearingSolution,
    d: DerivedConstants,
    p: EconomyParams,
    rule: QuadratureRule,
) -> float:
    """Lambda(t, x, h) = log E[z(X_T) e^{-P_U X_T^2/2 + P_U h X_T} | X_t = x].

    Computed by log-sum-exp over the conditional Gaussian quadrature, so it
    cannot overflow; at t = T the conditional law is degenerate and the
    integrand's log is returned directly.
    """
    if _is_terminal(t, p):
        return float(cs.log_z(x) + log_ell_tilt(x, h, d))
    law = conditional_law(t, x, p)
    y = law.mean + law.std * rule.nodes
    return float(logsumexp(rule.log_weights + cs.log_z(y) + log_ell_tilt(y, h, d)))


def _ratio_price(
    t: float,
    x: float,
    p: EconomyParams,
    rule: QuadratureRule,
    log_kernel: Callable,
) -> float:
    """exp-payoff expectation under the law reweighted by exp(log_kernel)."""
    if _is_terminal(t, p):
        return float(np.exp(x))
    law = conditional_law(t, x, p)
    y = law.mean + law.std * rule.nodes
    base = rule.log_weights + log_kernel(y)
    return float(np.exp(logsumexp(base + y) - logsumexp(base)))


def price(
    t: float,
    x: float,
    h: float,
    cs: ClearingSolution,
    d: DerivedConstants,
    p: EconomyParams,
    rule: QuadratureRule,
) -> float:
    """Equilibrium price S(t, x, h); equals the payoff e^x at t = T."""
    return _ratio_price(t, x, p, rule, lambda y: cs.log_z(y) + log_ell_tilt(y, h, d))


def _richardson(f: Callable, x: float, step: float = _FD_STEP) -> float:
    """Richardson-extrapolated central difference over steps {step, 2*step}."""

    def central(delta: float) -> float:
        return (f(x + delta) - f(x - delta)) / (2.0 * delta)

    return (4.0 * central(step) - central(2.0 * step)) / 3.0


def volatility(
    t: float,
    x: float,
    h: float,
    cs: ClearingSolution,
    d: DerivedConstants,
    p: EconomyParams,
    rule: QuadratureRule,
) -> float:
    """Price diffusion coefficient sigma_X dS/dx; sigma_X e^x at t = T."""
    if _is_terminal(t, p):
        return float(p.sigma_X * np.exp(x))
    return p.sigma_X * _richardson(lambda u: price(t, u, h, cs, d, p, rule), x)


def market_price_of_risk(
    t: float,
    x: float,
    h: float,
    cs: ClearingSolution,
    d: DerivedConstants,
    p: EconomyParams,
    rule: QuadratureRule,
) -> float:
    """-sigma_X dLambda/dx, the drift-to-volatility ratio of the price."""
    return -p.sigma_X * _richardson(
        lambda u: log_kernel_Lambda(t, u, h, cs, d, p, rule), x
    )


def price_limit_large_eta(
    t: float,
    x: float,
    h: float,
    d: DerivedConstants,
    p: EconomyParams,
    rule: QuadratureRule,
) -> float:
    """Price limit as the uninformed risk aversion explodes.

    The uninformed agent drops out and the kernel becomes
    exp(-vartheta/(alpha_I+alpha_N)) times the signal tilt; no budget
    constant is needed since constants cancel in the ratio.
    """
    return _ratio_price(
        t,
        x,
        p,
        rule,
        lambda y: -vartheta(y, h, d, p) / d.alpha_sum + log_ell_tilt(y, h, d),
    )


def price_limit_small_eta(
    t: float,
    x: float,
    h: float,
    kappa0: float,
    d: DerivedConstants,
    p: EconomyParams,
    rule: QuadratureRule,
) -> float:
    """Price limit as the uninformed risk aversion vanishes.

    kappa0 is the vanishing-risk-aversion budget constant from
    solve_kappa_small_eta; the kernel keeps only the negative part of
    vartheta + kappa0, scaled by 1/(alpha_I+alpha_N).
    """
    return _ratio_price(
        t,
        x,
        p,
        rule,
        lambda y: np.maximum(-(vartheta(y, h, d, p) + kappa0), 0.0) / d.alpha_sum
        + log_ell_tilt(y, h, d),
    )


def risk_neutral_price_closed(
    t: float, x: float, h: float, d: DerivedConstants, p: EconomyParams
) -> float:
    """Closed form for the risk-neutral price via the tilted Gaussian law."""
    if _is_terminal(t, p):
        return float(np.exp(x))
    tilted = tilted_gaussian(conditional_law(t, x, p), d.P_U, d.P_U * h)
    return float(np.exp(tilted.mean + 0.5 * tilted.variance))


def risk_neutral_price(
    t: float,
    x: float,
    h: float,
    d: DerivedConstants,
    p: EconomyParams,
    rule: QuadratureRule,
) -> float:
    """Payoff expectation under the signal tilt alone (kernel z = 1).

    Cross-checked against the tilted-Gaussian closed form; a disagreement
    beyond 1e-8 relative means the quadrature rule is inadequate for the
    economy and is raised rather than returned.
    """
    value = _ratio_price(t, x, p, rule, lambda y: log_ell_tilt(y, h, d))
    closed = risk_neutral_price_closed(t, x, h, d, p)
    if abs(value - closed) > 1e-8 * max(1.0, abs(closed)):
        raise RuntimeError("risk-neutral quadrature disagrees with the closed form")
    return value


def equilibrium_point(
    t: float,
    x: float,
    h: float,
    cs: ClearingSolution,
    d: DerivedConstants,
    p: EconomyParams,
    rule: QuadratureRule,
    check_rule: Optional[QuadratureRule] = None,
) -> EquilibriumPoint:
    """Assemble price, volatility, and MPR with a dual-order accuracy flag.

    Each quantity is recomputed with check_rule (by default the order-200
    rule) and quad_flag is set when any pair disagrees beyond 1e-8
    relative.
    """
    if check_rule is None:
        check_rule = gauss_hermite(max(CHECK_QUAD_ORDER, 2 * rule.order))
    values = []
    for r in (rule, check_rule):
        values.append(
            (
                price(t, x, h, cs, d, p, r),
                volatility(t, x, h, cs, d, p, r),
                market_price_of_risk(t, x, h, cs, d, p, r),
            )
        )
    (s, vol, mpr), (s2, vol2, mpr2) = values
    flag = any(
        abs(a - b) > _QUAD_AGREE_RTOL * max(1.0, abs(a), abs(b))
        for a, b in ((s, s2), (vol, vol2), (mpr, mpr2))
    )
    return EquilibriumPoint(t=t, x=x, h=h, price=s, volatility=vol, mpr=mpr, quad_flag=flag)


def consistent_signal_pair(
    h: float, d: DerivedConstants, p: EconomyParams, delta: float = 0.0
) -> tuple[float, float]:
    """A private-signal pair (g, g_N) aggregating to the public signal h.

    Any pair with alpha_I g + alpha_N g_N = (alpha_I + alpha_N tau_N) h +
    alpha_N mu_N is consistent; delta shifts the insider's signal while
    keeping the aggregate fixed.
    """
    g = h + delta
    g_N = ((d.alpha_I + d.alpha_N * p.tau_N) * h + d.alpha_N * p.mu_N - d.alpha_I * g) / d.alpha_N
    return g, g_N


def wealth_profile(
    h: float,
    g: float,
    g_N: float,
    cs: ClearingSolution,
    d: DerivedConstants,
    p: EconomyParams,
    rule: QuadratureRule,
) -> WealthProfile:
    """Optimal terminal wealths for signal realizations (h, g, g_N).

    The informed wealths are affine in the log of the normalized kernel
    Zcheck = z ell / E[z ell], each centered so its pricing-measure
    expectation vanishes; the uninformed wealth is I(z); w0_U is the value
    of the initial endowment at the time-0 price.
    """
    law = d.lawXT
    xq = law.mean + law.std * rule.nodes
    log_z_q = cs.log_z(xq)
    tilt_q = log_ell_tilt(xq, h, d)
    log_norm = float(logsumexp(rule.log_weights + log_z_q + tilt_q))
    qh_weights = np.exp(rule.log_weights + log_z_q + tilt_q - log_norm)
    qh_weights = qh_weights / qh_weights.sum()

    def log_z_check(x):
        return cs.log_z(x) + log_ell_tilt(x, h, d) - log_norm

    def informed_exponent(x, signal):
        return log_z_check(x) + 0.5 * d.P_I * np.asarray(x) ** 2 - signal * d.P_I * np.asarray(x)

    c_I = float(np.dot(qh_weights, informed_exponent(xq, g)))
    c_N = float(np.dot(qh_weights, informed_exponent(xq, g_N)))

    def w_I(x):
        return -(informed_exponent(x, g) - c_I) / p.gamma_I

    def w_N(x):
        return -(informed_exponent(x, g_N) - c_N) / p.gamma_N

    def w_U(x):
        return np.exp(_log_inverse_marginal(cs.log_z(x), cs.spec))

    w0_U = p.pi0_U * price(0.0, p.x0, h, cs, d, p, rule)
    return WealthProfile(w_I=w_I, w_N=w_N, w_U=w_U, w0_U=float(w0_U))


def market_clearing_residual(
    wp: WealthProfile, price0: float, x, p: EconomyParams
):
    """Pointwise market-clearing gap at terminal factor values x.

    omega-weighted terminal gains minus the supply-weighted payoff gain;
    identically zero in equilibrium.
    """
    x = np.asarray(x, dtype=np.float64)
    gains = (
        p.omega_I * wp.w_I(x)
        + p.omega_N * wp.w_N(x)
        + p.omega_U * (wp.w_U(x) - wp.w0_U)
    )
    return gains - p.Pi * (np.exp(x) - price0)
