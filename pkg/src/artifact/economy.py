"""Exogenous parameters, derived constants, and the clearing-scalar functions.

The economy has three agents trading one risky asset on [0, T]: an insider
I and a noise trader N with exponential utility and private signals about
the terminal factor value, and a price-taking agent U with power (or
general) utility who only sees a public signal h.  Everything downstream
is driven by a handful of constants derived here and by three scalar
functions of the terminal factor value x and the signal h:

    vartheta(x, h)  the right-hand side of the pointwise clearing equation,
    phi(x, h), V(h) the nonnegative envelope controlling kernel bounds,
    ell_T(x, h)     the conditional density of the public signal given x.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtri

from .special_math import GaussianLaw

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class EconomyParams:
    """All exogenous scalars.  Defaults are the baseline configuration.

    mu_X, sigma_X : drift and volatility of the log factor (per year).
    T : horizon in years.
    Pi : aggregate risky supply in shares.
    omega_I, omega_N, omega_U : population weights, summing to 1.
    gamma_I, gamma_N : CARA risk aversions of the informed agents.
    eta_U : CRRA relative risk aversion of the uninformed agent.
    C_I, C_N : private-signal noise variances.
    tau_N : loading of the noise trader's signal on the factor.
    mu_N : mean of the noise trader's signal noise.
    pi0_U : uninformed initial share endowment.
    x0 : initial factor value.
    """

    mu_X: float = 0.1
    sigma_X: float = 0.3
    T: float = 1.0
    Pi: float = 1.0
    omega_I: float = 1.0 / 3.0
    omega_N: float = 1.0 / 3.0
    omega_U: float = 1.0 / 3.0
    gamma_I: float = 3.0
    gamma_N: float = 3.0
    eta_U: float = 5.0
    C_I: float = 0.09
    C_N: float = 0.09
    tau_N: float = 1.0
    mu_N: float = 0.0
    pi0_U: float = 1.0
    x0: float = 0.0

    def __post_init__(self):
        if abs(self.omega_I + self.omega_N + self.omega_U - 1.0) > _WEIGHT_TOL:
            raise ValueError("population weights must sum to 1")
        for name in ("sigma_X", "T", "Pi", "gamma_I", "gamma_N", "C_I", "C_N", "eta_U"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("omega_I", "omega_N", "omega_U"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if not self.pi0_U > 0:
            raise ValueError("pi0_U must be positive (the uninformed agent may sit out)")


@dataclass(frozen=True)
class DerivedConstants:
    """Weighted risk tolerances, signal precisions, and the factor/signal laws."""

    alpha_I: float
    alpha_N: float
    C_U: float
    P_I: float
    P_N: float
    P_U: float
    lawXT: GaussianLaw
    lawH: GaussianLaw

    @property
    def alpha_sum(self) -> float:
        return self.alpha_I + self.alpha_N


def derive_constants(p: EconomyParams) -> DerivedConstants:
    """Compute the derived constants for an economy.

    The public signal aggregates the two private ones with weights given
    by the risk tolerances alpha_j = omega_j/gamma_j, so its conditional
    variance given the terminal factor value is
        C_U = C_I + (alpha_N/(alpha_I + alpha_N*tau_N))^2 * C_N,
    strictly above C_I, and the unconditional law of the signal is the
    factor law widened by C_U.
    """
    alpha_I = p.omega_I / p.gamma_I
    alpha_N = p.omega_N / p.gamma_N
    denom = alpha_I + alpha_N * p.tau_N
    if denom == 0.0:
        raise ZeroDivisionError("alpha_I + alpha_N*tau_N must be nonzero")
    C_U = p.C_I + (alpha_N / denom) ** 2 * p.C_N
    mean_XT = p.x0 + (p.mu_X - 0.5 * p.sigma_X**2) * p.T
    var_XT = p.sigma_X**2 * p.T
    lawXT = GaussianLaw(mean_XT, var_XT)
    lawH = GaussianLaw(mean_XT, var_XT + C_U)
    return DerivedConstants(
        alpha_I=alpha_I,
        alpha_N=alpha_N,
        C_U=C_U,
        P_I=1.0 / p.C_I,
        P_N=1.0 / p.C_N,
        P_U=1.0 / C_U,
        lawXT=lawXT,
        lawH=lawH,
    )


def conditional_law(t: float, x: float, p: EconomyParams) -> GaussianLaw:
    """Law of the terminal factor value given X_t = x (arithmetic BM)."""
    if not 0.0 <= t <= p.T:
        raise ValueError("t must lie in [0, T]")
    dt = p.T - t
    return GaussianLaw(x + (p.mu_X - 0.5 * p.sigma_X**2) * dt, p.sigma_X**2 * dt)


def vartheta(x, h: float, d: DerivedConstants, p: EconomyParams):
    """Clearing right-hand side vartheta(x, h); vectorized in x."""
    x = np.asarray(x, dtype=np.float64)
    coef_x2 = 0.5 * d.alpha_sum * (d.P_I - d.P_U)
    coef_xh = (d.alpha_I + d.alpha_N * p.tau_N) * d.P_I - d.alpha_sum * d.P_U
    out = (
        p.Pi * np.exp(x)
        - d.alpha_N * d.P_I * p.mu_N * x
        + coef_x2 * x * x
        - coef_xh * x * h
    )
    return float(out) if out.ndim == 0 else out


def phi_V(x, h: float, d: DerivedConstants, p: EconomyParams):
    """The envelope phi(x, h) >= 0 and its minimizing shift V(h).

    phi(x, h) = Pi*e^x/(alpha_I+alpha_N) + (x - V(h))^2 (P_I - P_U)/2,
    with V collecting the h- and mu_N-linear terms.  Requires P_I > P_U.
    """
    gap = d.P_I - d.P_U
    if gap <= 0:
        raise ValueError("degenerate economy: P_I must exceed P_U")
    x = np.asarray(x, dtype=np.float64)
    V = (
        ((d.alpha_I + d.alpha_N * p.tau_N) / d.alpha_sum * d.P_I - d.P_U) * h
        + d.alpha_N / d.alpha_sum * d.P_I * p.mu_N
    ) / gap
    phi = p.Pi * np.exp(x) / d.alpha_sum + 0.5 * gap * (x - V) ** 2
    return (float(phi) if phi.ndim == 0 else phi), float(V)


def ell_T(x, h: float, d: DerivedConstants):
    """Conditional signal density ell(T, x, h); vectorized in x.

    This is the normal density with variance C_U evaluated at h - x, i.e.
    p_{C_U}(h) * exp(-P_U x^2/2 + P_U h x).
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.exp(-0.5 * d.P_U * (x - h) ** 2 - 0.5 * np.log(2.0 * np.pi * d.C_U))
    return float(out) if out.ndim == 0 else out


def log_ell_tilt(x, h: float, d: DerivedConstants):
    """Exponent of the signal tilt, -P_U x^2/2 + P_U h x; vectorized in x.

    The density prefactor p_{C_U}(h) cancels in every expectation ratio,
    so internal code carries only this exponent.
    """
    x = np.asarray(x, dtype=np.float64)
    out = d.P_U * x * (h - 0.5 * x)
    return float(out) if out.ndim == 0 else out


def h_quantiles(d: DerivedConstants, qs: Sequence[float] = (0.1, 0.5, 0.9)) -> np.ndarray:
    """Signal values at the given quantiles of the unconditional signal law."""
    qs = np.asarray(qs, dtype=np.float64)
    if np.any((qs <= 0) | (qs >= 1)):
        raise ValueError("quantiles must lie strictly inside (0, 1)")
    return d.lawH.mean + d.lawH.std * ndtri(qs)


def baseline_params(**overrides) -> EconomyParams:
    """The baseline economy (all defaults), with optional field overrides."""
    return EconomyParams(**overrides)


def independent_noise_params(**overrides) -> EconomyParams:
    """A variant where the noise trader's signal is independent of the factor.

    tau_N = 0; the signal noise is recentered at the terminal factor mean
    and widened so the noise trader's marginal signal law matches the
    insider's (mu_N = E[X_T], C_N = Var[X_T] + C_I).
    """
    base = EconomyParams()
    mean_XT = base.x0 + (base.mu_X - 0.5 * base.sigma_X**2) * base.T
    var_XT = base.sigma_X**2 * base.T
    params = dataclasses.replace(
        base, tau_N=0.0, mu_N=mean_XT, C_N=var_XT + base.C_I
    )
    return dataclasses.replace(params, **overrides) if overrides else params
