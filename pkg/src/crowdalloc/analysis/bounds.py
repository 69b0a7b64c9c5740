"""Moment-based bounds for both allocation policies."""

from __future__ import annotations

import math

import numpy as np
from scipy import optimize
from scipy.special import logsumexp

from ..errors import ConvergenceError, DomainError
from .density import Density, MomentSummary, moments


def rho_root(f_v: Density) -> tuple[float, float]:
    """Non-trivial root of ``E[rho ** X] = 1`` and its moment approximation.

    Returns ``(numeric, approx)``: the root found by bracketed search on
    ``log rho``, and ``2 * mean / variance`` as a closed-form comparison.
    """
    m = f_v.masses
    keep = m > 0
    z = f_v.positions[keep]
    logm = np.log(m[keep] / m.sum())
    summary = moments(f_v)
    mean, var = summary.mean, summary.variance
    if mean == 0 or var == 0:
        raise DomainError("the root needs a vote density with non-zero mean and variance")

    def log_mgf(theta):
        return float(logsumexp(logm + theta * z))

    # log_mgf is convex with slope `mean` at 0: the other root lies on the
    # opposite side of 0 from the mean
    direction = -math.copysign(1.0, mean)
    near = direction * 1e-3 * abs(mean) / var
    if log_mgf(near) >= 0:
        near = direction * 1e-6 * abs(mean) / var
    far = direction * max(1.0, 2 * abs(mean) / var)
    while log_mgf(far) <= 0:
        far *= 2
        if abs(far) > 1e6:
            raise ConvergenceError("no sign change: the vote density is too one-sided", bracket=(near, far))
    lo, hi = sorted((near, far))
    theta = optimize.brentq(log_mgf, lo, hi, xtol=1e-14, rtol=1e-14)
    return math.exp(theta), 2.0 * mean / var


def gambler_ruin_bound(m: MomentSummary, rho0: float, z_b: float) -> float:
    """Upper bound on the expected labels per task under active learning.

    ``(1/mean) * ((2 z + g) (rho^(z+g) - 1) / (rho^(2z+g) - 1) - z)`` with
    ``g`` the support bound of the vote density.
    """
    if not (rho0 > 0 and rho0 != 1):
        raise DomainError("rho0 must be positive and different from 1")
    if not m.mean > 0:
        raise DomainError("the bound needs a positive mean increment")
    gamma = m.support_bound
    log_rho = math.log(rho0)
    ratio = math.expm1((z_b + gamma) * log_rho) / math.expm1((2 * z_b + gamma) * log_rho)
    return ((2 * z_b + gamma) * ratio - z_b) / m.mean


def chernoff_bound(m: MomentSummary, r_u: int) -> float:
    """Upper bound on the misclassification probability after ``r_u``
    uniform labels: ``1 / (1 + r_u mean^2 / var)``."""
    if m.mean == 0:
        raise DomainError("the bound needs a non-zero mean increment")
    if m.variance == 0:
        return 0.0
    return 1.0 / (1.0 + r_u * m.mean**2 / m.variance)
