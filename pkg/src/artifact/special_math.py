"""Foundational numerics: Lambert W, Gauss-Hermite quadrature, Gaussian laws.

Every conditional expectation in the pricing engine is an integral of some
function against a one-dimensional Gaussian law; this module provides the
quadrature rules, the laws, closed-form Gaussian-quadratic moments, and the
Lambert W function used by the power-utility clearing solution.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial import hermite_e
from scipy.special import logsumexp

from .backend import crra_log_z_arr, lambert_w0_arr, lambert_w_exp_arr

DEFAULT_QUAD_ORDER = 100
CHECK_QUAD_ORDER = 200


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for expectations against a standard normal.

    The rule is normalized so that sum(weights * f(nodes)) approximates
    E[f(Z)] with Z ~ N(0, 1); weights therefore sum to 1.
    """

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if self.order < 1 or len(nodes) != self.order or len(weights) != self.order:
            raise ValueError("order must match the node and weight counts")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")

    @property
    def log_weights(self) -> np.ndarray:
        return np.log(self.weights)


@dataclass(frozen=True)
class GaussianLaw:
    """A univariate normal law N(mean, variance)."""

    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError("variance must be positive")

    @property
    def std(self) -> float:
        return float(np.sqrt(self.variance))


def lambert_w0(y):
    """Principal branch W(y) for y >= -1/e, elementwise.

    Parameters
    ----------
    y : float or array_like
        Argument(s), each at least -1/e (an absolute slack of 1e-12 below
        the branch point is tolerated and clamped).

    Returns
    -------
    float or np.ndarray
        w >= -1 with w*exp(w) = y to near machine precision.
    """
    arr = np.atleast_1d(np.asarray(y, dtype=np.float64))
    out = lambert_w0_arr(arr.reshape(-1)).reshape(arr.shape)
    return float(out[0]) if np.isscalar(y) or np.ndim(y) == 0 else out


def lambert_w_exp(u):
    """W(exp(u)) elementwise, safe for arbitrarily large u."""
    arr = np.atleast_1d(np.asarray(u, dtype=np.float64))
    out = lambert_w_exp_arr(arr.reshape(-1)).reshape(arr.shape)
    return float(out[0]) if np.isscalar(u) or np.ndim(u) == 0 else out


def crra_log_z(rhs, eta: float, alpha_sum: float, omega_u: float):
    """Vectorized log z solving omega_u*z^(-1/eta) - alpha_sum*log z = rhs."""
    arr = np.atleast_1d(np.asarray(rhs, dtype=np.float64))
    out = crra_log_z_arr(arr.reshape(-1), eta, alpha_sum, omega_u).reshape(arr.shape)
    return float(out[0]) if np.isscalar(rhs) or np.ndim(rhs) == 0 else out


@lru_cache(maxsize=32)
def gauss_hermite(order: int) -> QuadratureRule:
    """Gauss-Hermite rule (probabilists' normalization) of a given order.

    Nodes and weights come from numpy's hermite_e Gauss rule, renormalized
    so the weights sum to 1; the rule then integrates polynomials in a
    standard normal variable exactly up to degree 2*order-1.  Extreme-node
    weights underflow double precision somewhere above order 300, which is
    rejected rather than silently truncated.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if order == 1:
        return QuadratureRule(np.zeros(1), np.ones(1), 1)
    with np.errstate(all="ignore"):
        nodes, weights = hermite_e.hermegauss(order)
    if not (np.all(np.isfinite(weights)) and np.all(weights > 0)):
        raise ValueError(f"order {order} too large for double-precision weights")
    weights = weights / weights.sum()
    return QuadratureRule(nodes, weights, order)


def expect(rule: QuadratureRule, law: GaussianLaw, f: Callable) -> float:
    """E[f(X)] for X ~ law, by quadrature.

    f is evaluated on the whole transformed node array at once when it
    supports that, falling back to a per-node loop otherwise.  A non-finite
    return value signals integrand overflow; callers needing exponentials
    of large exponents should use log_expect_exp instead.
    """
    x = law.mean + law.std * rule.nodes
    try:
        values = np.asarray(f(x), dtype=np.float64)
        if values.shape != x.shape:
            raise ValueError
    except (TypeError, ValueError):
        values = np.array([float(f(xi)) for xi in x])
    return float(np.dot(rule.weights, values))


def log_expect_exp(rule: QuadratureRule, law: GaussianLaw, log_f: Callable) -> float:
    """log E[exp(log_f(X))] for X ~ law, via a max-shifted log-sum-exp."""
    x = law.mean + law.std * rule.nodes
    return float(logsumexp(rule.log_weights + np.asarray(log_f(x), dtype=np.float64)))


def tilted_gaussian(law: GaussianLaw, b: float, c: float) -> GaussianLaw:
    """The law proportional to exp(-b*x^2/2 + c*x) times a Gaussian density.

    Completing the square: precision adds (1/v + b), so
        variance' = 1/(1/variance + b),
        mean'     = variance' * (mean/variance + c).
    Degenerate (raises) when 1/variance + b <= 0.
    """
    inv_v = 1.0 / law.variance + b
    if inv_v <= 0:
        raise ValueError("tilt is degenerate: 1/variance + b must be positive")
    v = 1.0 / inv_v
    m = v * (law.mean / law.variance + c)
    return GaussianLaw(m, v)


def log_gaussian_exp_moment(law: GaussianLaw, b: float, c: float) -> float:
    """log E[exp(-b*X^2/2 + c*X)] for X ~ law, in closed form."""
    tilted = tilted_gaussian(law, b, c)
    return float(
        0.5 * (np.log(tilted.variance) - np.log(law.variance))
        + 0.5 * (tilted.mean**2 / tilted.variance - law.mean**2 / law.variance)
    )
