"""Utility abstraction for the price-taking uninformed agent.

Solvers never evaluate the utility itself; everything in the clearing
analysis runs off the marginal utility, its inverse I, and the absolute
risk aversion gamma(w) = -u''(w)/u'(w).  A general von Neumann-Morgenstern
utility is therefore supplied as that triple, with power utility built in.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class UtilitySpec:
    """A utility on (0, inf) described by the functions the solvers need.

    Fields
    ------
    u : optional utility function (never called by solvers).
    marginal : u', strictly decreasing, Inada at both ends.
    inverse_marginal : I = (u')^{-1}.
    risk_aversion : w -> -u''(w)/u'(w), positive.
    has_unique_kappa : True when w -> w*u'(w) is non-decreasing, the
        condition under which the outer budget root is unique.
    crra_eta : set for power utility; lets solvers dispatch to the
        Lambert closed form.
    """

    marginal: Callable
    inverse_marginal: Callable
    risk_aversion: Callable
    has_unique_kappa: bool
    u: Optional[Callable] = None
    crra_eta: Optional[float] = None
    name: str = ""


def crra(eta: float) -> UtilitySpec:
    """Power utility with relative risk aversion eta > 0.

    marginal(w) = w^-eta, I(y) = y^(-1/eta), risk_aversion(w) = eta/w.
    The budget root is provably unique iff w*marginal(w) = w^(1-eta) is
    non-decreasing, i.e. eta <= 1.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")

    if eta == 1.0:
        u = np.log
    else:

        def u(w, _eta=eta):
            return (np.power(w, 1.0 - _eta) - 1.0) / (1.0 - _eta)

    return UtilitySpec(
        marginal=lambda w, _eta=eta: np.power(w, -_eta),
        inverse_marginal=lambda y, _eta=eta: np.power(y, -1.0 / _eta),
        risk_aversion=lambda w, _eta=eta: _eta / w,
        has_unique_kappa=eta <= 1.0,
        u=u,
        crra_eta=float(eta),
        name=f"crra({eta:g})",
    )


def weighted_risk_tolerance(spec: UtilitySpec, omega_U: float, w: float) -> float:
    """alpha_U(w) = omega_U / risk_aversion(w), for wealth w > 0."""
    if not w > 0:
        raise ValueError("wealth must be positive")
    return omega_U / float(spec.risk_aversion(w))
