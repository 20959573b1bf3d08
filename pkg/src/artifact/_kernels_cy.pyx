# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Reference semantics live in artifact._kernels_py."""
import numpy as np

from libc.math cimport exp, fabs, isfinite, log, log1p, sqrt

cdef double E_CONST = 2.718281828459045235
cdef double INV_E = 0.367879441171442322


cdef double _lw0_scalar(double y) noexcept:
    cdef double w, p, l1, l2, ew, f, wp1, denom, step, w_next
    cdef int i
    if y < -INV_E:
        y = -INV_E
    if y <= -0.3:
        p = sqrt(2.0 * (E_CONST * y + 1.0))
        w = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0)))
    elif y <= 2.5:
        w = log1p(y)
    else:
        l1 = log(y)
        l2 = log(l1)
        w = l1 - l2 + l2 / l1
    for i in range(50):
        ew = exp(w)
        f = w * ew - y
        if f == 0.0:
            break
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom != 0.0 and isfinite(denom):
            step = f / denom
        elif ew * wp1 != 0.0:
            step = f / (ew * wp1)
        else:
            break
        w_next = w - step
        if fabs(w_next - w) <= 1e-15 * (1.0 + fabs(w_next)):
            w = w_next
            break
        w = w_next
    return w


cdef double _lwexp_scalar(double u) noexcept:
    cdef double w, w_next
    cdef int i
    if u <= 700.0:
        return _lw0_scalar(exp(u))
    w = u - log(u)
    for i in range(20):
        w_next = u - log(w)
        if fabs(w_next - w) <= 1e-15 * w_next:
            w = w_next
            break
        w = w_next
    return w - (w + log(w) - u) / (1.0 + 1.0 / w)


def lambert_w0(y):
    """Principal Lambert W branch on a 1-d float64 array."""
    arr = np.ascontiguousarray(y, dtype=np.float64)
    if np.any(arr < -INV_E - 1e-12):
        raise ValueError("lambert_w0 requires y >= -1/e")
    out = np.empty_like(arr)
    cdef double[::1] yv = arr
    cdef double[::1] ov = out
    cdef Py_ssize_t i, n = yv.shape[0]
    for i in range(n):
        ov[i] = _lw0_scalar(yv[i])
    return out


def lambert_w_exp(u):
    """W(exp(u)) on a 1-d float64 array, overflow-free."""
    arr = np.ascontiguousarray(u, dtype=np.float64)
    out = np.empty_like(arr)
    cdef double[::1] uv = arr
    cdef double[::1] ov = out
    cdef Py_ssize_t i, n = uv.shape[0]
    for i in range(n):
        ov[i] = _lwexp_scalar(uv[i])
    return out


def crra_log_z(rhs, double eta, double alpha_sum, double omega_u):
    """log z solving omega_u*z^(-1/eta) - alpha_sum*log z = rhs (1-d array)."""
    arr = np.ascontiguousarray(rhs, dtype=np.float64)
    out = np.empty_like(arr)
    cdef double s = alpha_sum * eta
    cdef double log_a = log(omega_u) - log(s)
    cdef double b
    cdef double[::1] rv = arr
    cdef double[::1] ov = out
    cdef Py_ssize_t i, n = rv.shape[0]
    for i in range(n):
        b = rv[i] / s
        ov[i] = eta * (_lwexp_scalar(b + log_a) - b)
    return out
