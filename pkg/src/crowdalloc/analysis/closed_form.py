"""Closed forms for a homogeneous crowd, where every worker has skill ``p``."""

from __future__ import annotations

import math

from ..errors import DomainError


def homogeneous_expected_steps(p: float, z_b: float) -> float:
    """Expected labels per task under active learning with threshold ``z_b``.

    ``(2 e^z / (1 + e^z) - 1) z / ((2p - 1) log(p / (1 - p)))`` with the
    first factor evaluated as ``tanh(z / 2)``. Exact when ``z_b`` is a
    multiple of the vote weight; elsewhere it ignores the overshoot.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"skill must lie in (0, 1), got {p}")
    if p == 0.5:
        raise DomainError("skill 1/2 has zero drift; the expected duration is unbounded")
    if not z_b > 0:
        raise DomainError("threshold must be positive")
    drift = (2.0 * p - 1.0) * (math.log(p) - math.log1p(-p))
    return math.tanh(z_b / 2.0) * z_b / drift


def homogeneous_exit_accuracy(z_b: float) -> float:
    """Probability of exiting through the correct side when the walk stops
    exactly on the threshold: the posterior confidence at ``z_b``."""
    return 1.0 / (1.0 + math.exp(-z_b))


def homogeneous_uniform_accuracy(p: float, r_u: int) -> float:
    """Majority-vote accuracy of ``r_u`` (odd) independent labels of skill ``p``.

    The binomial coefficient is included; without it the sum is not a
    probability.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"skill must lie in (0, 1), got {p}")
    if int(r_u) != r_u or r_u < 1 or r_u % 2 == 0:
        raise DomainError(f"number of labels must be an odd positive integer, got {r_u}")
    r_u = int(r_u)
    return math.fsum(math.comb(r_u, r) * p**r * (1.0 - p) ** (r_u - r) for r in range((r_u + 1) // 2, r_u + 1))
