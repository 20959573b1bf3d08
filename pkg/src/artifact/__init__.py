"""Equilibrium state prices in a market with informed, noise, and uninformed traders.

The package solves a pointwise market-clearing equation for the terminal
state-price kernel, pins its budget constant by root finding, and turns
the kernel into prices, volatilities, and the market price of risk by
Gauss-Hermite quadrature, with Monte-Carlo cross-checks and a CLI for
sensitivity sweeps.
"""
from .backend import BACKEND
from .clearing_solver import (
    ClearingSolution,
    SolverStats,
    budget_g,
    kappa_small_eta_candidate,
    solve_kappa_hat,
    solve_kappa_small_eta,
    solve_log_z,
    solve_log_z_tilde,
    solve_z,
    solve_z_crra,
    solve_z_tilde,
)
from .economy import (
    DerivedConstants,
    EconomyParams,
    baseline_params,
    conditional_law,
    derive_constants,
    ell_T,
    h_quantiles,
    independent_noise_params,
    log_ell_tilt,
    phi_V,
    vartheta,
)
from .equilibrium import (
    EquilibriumPoint,
    WealthProfile,
    consistent_signal_pair,
    equilibrium_point,
    log_kernel_Lambda,
    market_clearing_residual,
    market_price_of_risk,
    price,
    price_limit_large_eta,
    price_limit_small_eta,
    risk_neutral_price,
    risk_neutral_price_closed,
    volatility,
    wealth_profile,
)
from .preferences import UtilitySpec, crra, weighted_risk_tolerance
from .special_math import (
    DEFAULT_QUAD_ORDER,
    GaussianLaw,
    QuadratureRule,
    crra_log_z,
    expect,
    gauss_hermite,
    lambert_w0,
    lambert_w_exp,
    log_expect_exp,
    log_gaussian_exp_moment,
    tilted_gaussian,
)
from .verification import (
    CheckResult,
    McConfig,
    VerificationReport,
    mc_price,
    run_full_verification,
    tower_price_mc,
    tower_price_quadrature,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CheckResult",
    "ClearingSolution",
    "DEFAULT_QUAD_ORDER",
    "DerivedConstants",
    "EconomyParams",
    "EquilibriumPoint",
    "GaussianLaw",
    "McConfig",
    "QuadratureRule",
    "SolverStats",
    "UtilitySpec",
    "VerificationReport",
    "WealthProfile",
    "baseline_params",
    "budget_g",
    "conditional_law",
    "consistent_signal_pair",
    "crra",
    "crra_log_z",
    "derive_constants",
    "ell_T",
    "equilibrium_point",
    "expect",
    "gauss_hermite",
    "h_quantiles",
    "independent_noise_params",
    "kappa_small_eta_candidate",
    "lambert_w0",
    "lambert_w_exp",
    "log_ell_tilt",
    "log_expect_exp",
    "log_gaussian_exp_moment",
    "log_kernel_Lambda",
    "market_clearing_residual",
    "market_price_of_risk",
    "mc_price",
    "phi_V",
    "price",
    "price_limit_large_eta",
    "price_limit_small_eta",
    "risk_neutral_price",
    "risk_neutral_price_closed",
    "run_full_verification",
    "solve_kappa_hat",
    "solve_kappa_small_eta",
    "solve_log_z",
    "solve_log_z_tilde",
    "solve_z",
    "solve_z_crra",
    "solve_z_tilde",
    "tilted_gaussian",
    "tower_price_mc",
    "tower_price_quadrature",
    "vartheta",
    "volatility",
    "wealth_profile",
    "weighted_risk_tolerance",
]
