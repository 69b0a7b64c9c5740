"""Worker-to-task allocation rules.

Three rules are provided: uniform allocation (fewest labels first),
uncertainty sampling (smallest ``|z|`` first) and the greedy rule that
maximises the expected information gain of the next label. For every
worker with skill other than 1/2 the greedy rule picks the same task as
uncertainty sampling; ``select_greedy_ig`` nevertheless evaluates the gains
so the two routes can be checked against each other.

``eligible`` is either ``None`` (all tasks), a boolean mask, or an iterable
of task ids. Ties always go to the lowest task id.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .domain import logit
from .errors import AllocationError


def _softplus(x):
    return np.logaddexp(0.0, x)


def info_gain(z, x):
    """KL divergence from the current task posterior to the posterior after
    adding ``x`` to the log-odds ``z``.

    Evaluated as ``x*s(z+x) + softplus(z) - softplus(z+x)``. For ``z > 0`` the
    algebraically equal form ``-x*s(-z-x) + softplus(-z) - softplus(-z-x)`` is
    used instead, which avoids cancellation and makes
    ``info_gain(z, x) == info_gain(-z, -x)`` hold bit for bit.
    """
    z = np.asarray(z, dtype=float)
    x = np.asarray(x, dtype=float)
    pos = z > 0
    zs = np.where(pos, -z, z)
    xs = np.where(pos, -x, x)
    value = xs * expit(zs + xs) + _softplus(zs) - _softplus(zs + xs)
    value = np.maximum(value, 0.0)
    return value if value.ndim else float(value)


def outcome_probabilities(z, p):
    """Predictive probabilities of the next increment being ``+w`` and ``-w``,
    where ``w = log(p / (1 - p))``."""
    q_pos = expit(z)
    q_neg = expit(-np.asarray(z, dtype=float))
    return p * q_pos + (1.0 - p) * q_neg, p * q_neg + (1.0 - p) * q_pos


def expected_info_gain(z, p):
    """Expected ``info_gain`` of one label from a worker of skill ``p`` on a
    task with log-odds ``z``."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"skill must lie in (0, 1), got {p}")
    w = logit(p)
    plus, minus = outcome_probabilities(z, p)
    value = plus * info_gain(z, w) + minus * info_gain(z, -w)
    return value if np.ndim(value) else float(value)


def _mask(eligible, n):
    if eligible is None:
        return None
    arr = np.asarray(eligible)
    if arr.dtype == bool and arr.shape == (n,):
        return arr
    mask = np.zeros(n, dtype=bool)
    ids = np.fromiter((int(i) for i in eligible), dtype=np.int64)
    mask[ids] = True
    return mask


def _arg_best(score, eligible):
    """Index of the smallest score among eligible entries (lowest id on ties)."""
    score = np.asarray(score, dtype=float)
    mask = _mask(eligible, len(score))
    if mask is not None:
        if not mask.any():
            raise AllocationError("no eligible task for this worker")
        score = np.where(mask, score, np.inf)
    elif len(score) == 0:
        raise AllocationError("no tasks to allocate")
    return int(np.argmin(score))


def select_uncertainty(logodds, eligible=None) -> int:
    return _arg_best(np.abs(np.asarray(logodds, dtype=float)), eligible)


def select_greedy_ig(logodds, p: float, eligible=None) -> int:
    gains = expected_info_gain(np.asarray(logodds, dtype=float), p)
    return _arg_best(-np.atleast_1d(gains), eligible)


def select_uniform(label_counts, eligible=None) -> int:
    return _arg_best(np.asarray(label_counts, dtype=float), eligible)


def select_random_tie(score, eligible, rng: np.random.Generator) -> int:
    """Like the ``select_*`` rules but breaks exact ties uniformly at random."""
    score = np.asarray(score, dtype=float)
    mask = _mask(eligible, len(score))
    if mask is not None:
        if not mask.any():
            raise AllocationError("no eligible task for this worker")
        score = np.where(mask, score, np.inf)
    best = np.flatnonzero(score == score.min())
    return int(best[rng.integers(len(best))])
