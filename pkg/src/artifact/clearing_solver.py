"""Solvers for the pointwise clearing equation and the budget constant.

For each public-signal value h the state-price kernel z(x, h, kappa)
solves, at every terminal factor value x,

    omega_U I(z) - (alpha_I + alpha_N) log z = vartheta(x, h) + kappa,

whose left side is a strictly decreasing bijection of (0, inf) onto the
reals.  The integration constant kappa is then pinned by the uninformed
agent's budget: g(kappa) = 1 where

    g(kappa) = E[pi0_U Psi(X_T) ell z] / E[I(z) ell z].

With power utility the inner equation has a Lambert-function closed form;
a safeguarded bisection covers general utilities.  Everything is computed
in log space so that quadratic tilts and large kappa cannot overflow.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .economy import DerivedConstants, EconomyParams, log_ell_tilt, phi_V, vartheta
from .preferences import UtilitySpec
from .special_math import QuadratureRule, crra_log_z

_KAPPA_LIMIT = 1e6
_MAX_DOUBLINGS = 200
_BISECT_ITERS = 90
_KAPPA_BISECT_ITERS = 80
_SCAN_POINTS = 256


@dataclass(frozen=True)
class SolverStats:
    """Iteration counts and bracket endpoints from the budget root find."""

    iterations: int
    bracket_lo: float
    bracket_hi: float
    g_evaluations: int
    sign_changes: int = 1
    multiple_roots: bool = False


@dataclass(frozen=True)
class ClearingSolution:
    """The clearing kernel for one signal realization h.

    z maps terminal factor values to kernel values at the solved
    kappa_hat; log_z is the same map in log space (the form every
    downstream quadrature actually wants); z_tilde is the x-free upper
    envelope at kappa_hat, with log_z_tilde its overflow-safe log (for
    extreme risk aversions the envelope itself can leave double range).
    """

    h: float
    kappa_hat: float
    z: Callable
    log_z: Callable
    z_tilde: float
    log_z_tilde: float
    budget_residual: float
    solver_stats: SolverStats
    spec: UtilitySpec


def _log_z_generic(rhs, spec: UtilitySpec, d: DerivedConstants, p: EconomyParams):
    """Safeguarded bisection plus Newton polish for log z, vectorized in rhs.

    G(l) = omega_U I(e^l) - alpha_sum l - rhs is strictly decreasing in l;
    the bracket is grown by doubling from l = 0, then bisected, then
    polished with the exact derivative G'(l) = -(alpha_U(I(e^l)) +
    alpha_sum), alpha_U(w) = omega_U/gamma_U(w).
    """
    rhs = np.atleast_1d(np.asarray(rhs, dtype=np.float64))
    alpha_sum = d.alpha_sum

    def G(l):
        with np.errstate(divide="ignore", over="ignore"):
            w = spec.inverse_marginal(np.exp(l))
            return p.omega_U * w - alpha_sum * l - rhs

    lo = np.zeros_like(rhs)
    hi = np.zeros_like(rhs)
    g0 = G(lo)
    up = g0 > 0  # G decreasing, so the root sits to the right of 0
    step = np.ones_like(rhs)
    hi = np.where(up, 1.0, 0.0)
    lo = np.where(up, 0.0, -1.0)
    for _ in range(_MAX_DOUBLINGS):
        ghi = G(hi)
        glo = G(lo)
        grow_hi = up & (ghi > 0)
        grow_lo = (~up) & (glo < 0)
        if not (grow_hi.any() or grow_lo.any()):
            break
        lo = np.where(grow_hi, hi, lo)
        hi = np.where(grow_lo, lo, hi)
        step = np.where(grow_hi | grow_lo, 2.0 * step, step)
        hi = np.where(grow_hi, hi + step, hi)
        lo = np.where(grow_lo, lo - step, lo)
    else:
        raise RuntimeError("clearing bracket expansion failed: pathological utility")

    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        gm = G(mid)
        take_right = gm > 0
        lo = np.where(take_right, mid, lo)
        hi = np.where(take_right, hi, mid)
    l = 0.5 * (lo + hi)

    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        for _ in range(3):
            w = spec.inverse_marginal(np.exp(l))
            g = p.omega_U * w - alpha_sum * l - rhs
            slope = -(p.omega_U / spec.risk_aversion(w) + alpha_sum)
            l_new = l - g / slope
            l = np.clip(np.where(np.isfinite(l_new), l_new, l), lo, hi)
    return l


def solve_log_z(x, h: float, kappa: float, spec: UtilitySpec, d: DerivedConstants, p: EconomyParams):
    """log z(x, h, kappa), vectorized in x; dispatches on the utility."""
    rhs = vartheta(x, h, d, p) + kappa
    if spec.crra_eta is not None:
        return crra_log_z(rhs, spec.crra_eta, d.alpha_sum, p.omega_U)
    out = _log_z_generic(rhs, spec, d, p)
    return float(out[0]) if np.ndim(x) == 0 else out


def solve_z(x, h: float, kappa: float, spec: UtilitySpec, d: DerivedConstants, p: EconomyParams):
    """The kernel value z(x, h, kappa) > 0, vectorized in x."""
    return np.exp(solve_log_z(x, h, kappa, spec, d, p))


def solve_z_crra(x, h: float, kappa: float, eta: float, d: DerivedConstants, p: EconomyParams):
    """Lambert closed form for the power-utility kernel, vectorized in x."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    rhs = vartheta(x, h, d, p) + kappa
    return np.exp(crra_log_z(rhs, eta, d.alpha_sum, p.omega_U))


def solve_log_z_tilde(h: float, kappa: float, spec: UtilitySpec, d: DerivedConstants, p: EconomyParams) -> float:
    """log of the x-free envelope z_tilde(h, kappa) >= z(x, h, kappa).

    Solves the clearing equation with the x-dependent right side replaced
    by its infimum: rhs = -alpha_sum V(h)^2 (P_I - P_U)/2 + kappa.
    """
    _, V = phi_V(0.0, h, d, p)
    rhs = -0.5 * d.alpha_sum * (d.P_I - d.P_U) * V * V + kappa
    if spec.crra_eta is not None:
        return float(crra_log_z(rhs, spec.crra_eta, d.alpha_sum, p.omega_U))
    return float(_log_z_generic(rhs, spec, d, p)[0])


def solve_z_tilde(h: float, kappa: float, spec: UtilitySpec, d: DerivedConstants, p: EconomyParams) -> float:
    """The envelope itself; inf when it exceeds double range (see log form)."""
    with np.errstate(over="ignore"):
        return float(np.exp(solve_log_z_tilde(h, kappa, spec, d, p)))


def _log_inverse_marginal(log_z, spec: UtilitySpec):
    if spec.crra_eta is not None:
        return -np.asarray(log_z) / spec.crra_eta
    with np.errstate(divide="ignore", over="ignore"):
        return np.log(spec.inverse_marginal(np.exp(log_z)))


def _log_budget_g(
    kappa: float,
    h: float,
    spec: UtilitySpec,
    d: DerivedConstants,
    p: EconomyParams,
    rule: QuadratureRule,
) -> float:
    law = d.lawXT
    x = law.mean + law.std * rule.nodes
    log_z = solve_log_z(x, h, kappa, spec, d, p)
    base = rule.log_weights + log_ell_tilt(x, h, d) + log_z
    log_num = logsumexp(base + x) + np.log(p.pi0_U)
    log_den = logsumexp(base + _log_inverse_marginal(log_z, spec))
    return float(log_num - log_den)


def budget_g(
    kappa: float,
    h: float,
    spec: UtilitySpec,
    d: DerivedConstants,
    p: EconomyParams,
    rule: QuadratureRule,
) -> float:
    """The budget ratio g(kappa) = E[pi0_U Psi ell z] / E[I(z) ell z].

    Both integrals run over the unconditional terminal factor law; the
    signal-density prefactor cancels in the ratio.  Returns inf in the
    far-below-root regime where the denominator underflows (g -> inf as
    kappa -> -inf).
    """
    with np.errstate(over="ignore"):
        return float(np.exp(_log_budget_g(kappa, h, spec, d, p, rule)))


def _expand_budget_bracket(logg: Callable, stats: dict) -> tuple[float, float]:
    """Double outward from kappa = 0 until log g changes sign.

    g is decreasing in kappa near its root (strictly so for utilities
    with has_unique_kappa), so a positive log g pushes the bracket right.
    Returns (lo, hi) with log g(lo) > 0 > log g(hi).
    """
    v0 = logg(0.0)
    if v0 == 0.0:
        return (0.0, 0.0)
    if v0 > 0:
        lo, hi = 0.0, 1.0
        while logg(hi) > 0:
            lo, hi = hi, 2.0 * hi
            if hi > _KAPPA_LIMIT:
                raise RuntimeError("no budget root with |kappa| <= 1e6: economy infeasible")
    else:
        lo, hi = -1.0, 0.0
        while logg(lo) < 0:
            lo, hi = 2.0 * lo, lo
            if lo < -_KAPPA_LIMIT:
                raise RuntimeError("no budget root with |kappa| <= 1e6: economy infeasible")
    stats["bracket"] = (lo, hi)
    return lo, hi


def _bisect_scalar(f: Callable, lo: float, hi: float, iters: int) -> float:
    """Bisection for a decreasing f with f(lo) > 0 > f(hi)."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_kappa_hat(
    h: float,
    spec: UtilitySpec,
    d: DerivedConstants,
    p: EconomyParams,
    rule: QuadratureRule,
) -> ClearingSolution:
    """Find kappa_hat(h) with g(kappa_hat) = 1 and assemble the solution.

    For utilities with a provably unique root the sign-change bracket from
    doubling is bisected directly.  Otherwise the bracket is scanned at
    256 points, the sign change nearest kappa = 0 is bisected, and the
    solution is flagged when several sign changes are present.
    """
    evals = [0]

    def logg(k: float) -> float:
        evals[0] += 1
        return _log_budget_g(k, h, spec, d, p, rule)

    stats_scratch: dict = {}
    lo, hi = _expand_budget_bracket(logg, stats_scratch)
    sign_changes = 1
    if hi > lo and not spec.has_unique_kappa:
        grid = np.linspace(lo, hi, _SCAN_POINTS)
        values = np.array([logg(k) for k in grid])
        sign_flip = np.flatnonzero(np.diff(np.signbit(values)))
        sign_changes = max(1, len(sign_flip))
        mids = 0.5 * (grid[sign_flip] + grid[sign_flip + 1])
        pick = sign_flip[np.argmin(np.abs(mids))]
        lo, hi = float(grid[pick]), float(grid[pick + 1])
        if values[pick] < 0:
            # locally increasing crossing: bisect on the negated function
            kappa_hat = _bisect_scalar(lambda k: -logg(k), lo, hi, _KAPPA_BISECT_ITERS)
        else:
            kappa_hat = _bisect_scalar(logg, lo, hi, _KAPPA_BISECT_ITERS)
        iterations = _KAPPA_BISECT_ITERS
    elif hi > lo:
        kappa_hat = _bisect_scalar(logg, lo, hi, _KAPPA_BISECT_ITERS)
        iterations = _KAPPA_BISECT_ITERS
    else:
        kappa_hat, iterations = lo, 0

    def log_z(x, _k=kappa_hat):
        return solve_log_z(x, h, _k, spec, d, p)

    def z(x, _k=kappa_hat):
        with np.errstate(over="ignore"):
            return np.exp(solve_log_z(x, h, _k, spec, d, p))

    log_z_tilde = solve_log_z_tilde(h, kappa_hat, spec, d, p)
    residual = budget_g(kappa_hat, h, spec, d, p, rule) - 1.0
    stats = SolverStats(
        iterations=iterations,
        bracket_lo=float(stats_scratch.get("bracket", (kappa_hat, kappa_hat))[0]),
        bracket_hi=float(stats_scratch.get("bracket", (kappa_hat, kappa_hat))[1]),
        g_evaluations=evals[0],
        sign_changes=sign_changes,
        multiple_roots=sign_changes > 1,
    )
    with np.errstate(over="ignore"):
        z_tilde = float(np.exp(log_z_tilde))
    solution = ClearingSolution(
        h=h,
        kappa_hat=float(kappa_hat),
        z=z,
        log_z=log_z,
        z_tilde=z_tilde,
        log_z_tilde=float(log_z_tilde),
        budget_residual=float(residual),
        solver_stats=stats,
        spec=spec,
    )
    _check_bounds(solution, spec, d, p)
    return solution


def _check_bounds(
    cs: ClearingSolution, spec: UtilitySpec, d: DerivedConstants, p: EconomyParams
) -> None:
    """Verify the kernel envelope on a diagnostic grid (internal gate).

    z_tilde e^{-phi} <= z <= z_tilde and I(z) <= I(z_tilde) +
    alpha_sum/omega_U phi must hold everywhere; a violation means the
    solver state is inconsistent and is raised, not returned.
    """
    law = d.lawXT
    x = np.linspace(law.mean - 5.0 * law.std, law.mean + 5.0 * law.std, 41)
    log_z = cs.log_z(x)
    phi, _ = phi_V(x, cs.h, d, p)
    log_zt = cs.log_z_tilde
    slack = 1e-9 * (1.0 + np.abs(log_zt))
    if np.any(log_z > log_zt + slack) or np.any(log_z < log_zt - phi - slack):
        raise RuntimeError("kernel bound violation on the diagnostic grid")
    iz = np.exp(_log_inverse_marginal(log_z, spec))
    iz_tilde = np.exp(_log_inverse_marginal(log_zt, spec))
    upper = iz_tilde + d.alpha_sum / p.omega_U * phi
    if np.any(iz > upper * (1.0 + 1e-9) + 1e-12):
        raise RuntimeError("inverse-marginal bound violation on the diagnostic grid")


def _log_pos(values: np.ndarray) -> np.ndarray:
    """log of the positive part, -inf where the argument is <= 0."""
    out = np.full_like(values, -np.inf)
    mask = values > 0
    out[mask] = np.log(values[mask])
    return out


def solve_kappa_small_eta(
    h: float, d: DerivedConstants, p: EconomyParams, rule: QuadratureRule
) -> float:
    """The vanishing-risk-aversion budget constant kappa_hat(h; 0).

    Solves 1/omega_U = E[pi0_U Psi e^{(vartheta+kappa)^- / alpha_sum} ell]
    / E[(vartheta+kappa)^+ ell].  The ratio is strictly decreasing in
    kappa, so the difference of logs is bracketed by doubling from 0 and
    bisected.
    """
    law = d.lawXT
    x = law.mean + law.std * rule.nodes
    theta = vartheta(x, h, d, p)
    base = rule.log_weights + log_ell_tilt(x, h, d)
    log_scale = np.log(p.omega_U) + np.log(p.pi0_U)

    def diff(kappa: float) -> float:
        shifted = theta + kappa
        lhs = log_scale + logsumexp(base + x + np.maximum(-shifted, 0.0) / d.alpha_sum)
        rhs = logsumexp(base + _log_pos(shifted))
        return float(lhs - rhs)

    v0 = diff(0.0)
    if v0 == 0.0:
        return 0.0
    if v0 > 0:
        lo, hi = 0.0, 1.0
        while diff(hi) > 0:
            lo, hi = hi, 2.0 * hi
            if hi > _KAPPA_LIMIT:
                raise RuntimeError("no small-risk-aversion root with |kappa| <= 1e6")
    else:
        lo, hi = -1.0, 0.0
        while diff(lo) < 0:
            lo, hi = 2.0 * lo, lo
            if lo < -_KAPPA_LIMIT:
                raise RuntimeError("no small-risk-aversion root with |kappa| <= 1e6")
    return _bisect_scalar(diff, lo, hi, _KAPPA_BISECT_ITERS)


def kappa_small_eta_candidate(
    h: float, d: DerivedConstants, p: EconomyParams, rule: QuadratureRule
) -> float:
    """The explicit candidate E[(omega_U pi0_U Psi - vartheta) ell]/E[ell].

    Coincides with kappa_hat(h; 0) whenever vartheta + kappa stays
    nonnegative on the quadrature support.
    """
    law = d.lawXT
    x = law.mean + law.std * rule.nodes
    tilt = log_ell_tilt(x, h, d)
    shift = tilt.max()
    weights = rule.weights * np.exp(tilt - shift)
    values = p.omega_U * p.pi0_U * np.exp(x) - vartheta(x, h, d, p)
    return float(np.dot(weights, values) / weights.sum())
