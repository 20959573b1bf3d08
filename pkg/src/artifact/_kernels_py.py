"""Pure numpy implementations of the hot numerical kernels.

These are the functions evaluated at every quadrature node inside every
root-find inside every sweep cell, so they also exist as a compiled
extension (``artifact._kernels_cy``).  Both backends implement the same
three functions with identical semantics; ``artifact.backend`` picks one
at import time.
"""
from __future__ import annotations

import numpy as np

# exp() overflows a little above 709; switch to the log recursion before that
_EXP_CUTOFF = 700.0

_INV_E = 1.0 / np.e


def lambert_w0(y: np.ndarray) -> np.ndarray:
    """Principal branch of the Lambert W function (w >= -1, y >= -1/e).

    Piecewise initial guess (series near the branch point, log-based for
    large arguments) refined by Halley iteration, capped at 50 steps.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    if np.any(y < -_INV_E - 1e-12):
        raise ValueError("lambert_w0 requires y >= -1/e")
    yc = np.maximum(y, -_INV_E)

    w = np.empty_like(yc)
    near = yc <= -0.3
    if np.any(near):
        # series in p = sqrt(2(e*y+1)) around the branch point
        p = np.sqrt(2.0 * (np.e * yc[near] + 1.0))
        w[near] = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0)))
    mid = (~near) & (yc <= 2.5)
    if np.any(mid):
        w[mid] = np.log1p(yc[mid])
    big = yc > 2.5
    if np.any(big):
        l1 = np.log(yc[big])
        l2 = np.log(l1)
        w[big] = l1 - l2 + l2 / l1

    for _ in range(50):
        ew = np.exp(w)
        f = w * ew - yc
        wp1 = w + 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
            step = f / denom
            newton = f / (ew * wp1)
        step = np.where(np.isfinite(step), step, np.where(np.isfinite(newton), newton, 0.0))
        step = np.where(f == 0.0, 0.0, step)
        w_next = w - step
        done = np.abs(w_next - w) <= 1e-15 * (1.0 + np.abs(w_next))
        w = w_next
        if np.all(done):
            break
    return w


def lambert_w_exp(u: np.ndarray) -> np.ndarray:
    """W(e^u) for arbitrary real u, without overflow.

    Below the exp overflow threshold this is lambert_w0(exp(u)); above it
    the defining equation w + log w = u is solved by the contraction
    w <- u - log w (contraction rate 1/w < 1/700) plus one Newton polish.
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    w = np.empty_like(u)
    small = u <= _EXP_CUTOFF
    if np.any(small):
        w[small] = lambert_w0(np.exp(u[small]))
    if np.any(~small):
        ub = u[~small]
        wb = ub - np.log(ub)
        for _ in range(20):
            wb_next = ub - np.log(wb)
            if np.all(np.abs(wb_next - wb) <= 1e-15 * wb_next):
                wb = wb_next
                break
            wb = wb_next
        wb = wb - (wb + np.log(wb) - ub) / (1.0 + 1.0 / wb)
        w[~small] = wb
    return w


def crra_log_z(rhs: np.ndarray, eta: float, alpha_sum: float, omega_u: float) -> np.ndarray:
    """log z solving omega_u*z^(-1/eta) - alpha_sum*log z = rhs.

    Stable rearrangement of the Lambert closed form:
        log z = eta*(W(A e^B) - B),  A = omega_u/(alpha_sum*eta),
        B = rhs/(alpha_sum*eta),
    evaluated as W(e^(B + log A)) so no intermediate can overflow.
    """
    rhs = np.ascontiguousarray(rhs, dtype=np.float64)
    s = alpha_sum * eta
    b = rhs / s
    log_a = np.log(omega_u) - np.log(s)
    return eta * (lambert_w_exp(b + log_a) - b)
