"""Label fusion with known worker skills.

The optimal rule weighs every label by the log-odds of its worker's skill;
the sign of the weighted sum is the prediction and its magnitude the
confidence. Exact zeros are resolved by a fair coin drawn from the caller's
generator so accuracy statistics stay unbiased between the two classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import check_label, logit


@dataclass(frozen=True)
class AggregateResult:
    logodds: float
    predicted: int
    confidence: float


def log_odds(labels) -> float:
    """Sum of ``label * log(p / (1 - p))`` over ``(label, skill)`` pairs."""
    # fsum keeps balanced votes at an exact zero regardless of order
    return math.fsum(check_label(label) * logit(skill) for label, skill in labels)


def classify(z: float, rng: np.random.Generator | None = None) -> int:
    if z > 0:
        return 1
    if z < 0:
        return -1
    if rng is None:
        raise ValueError("a generator is required to break a tie at z = 0")
    return 1 if rng.random() < 0.5 else -1


def confidence(z: float) -> float:
    """exp(|z|) / (1 + exp(|z|)), without overflow for large |z|."""
    return 1.0 / (1.0 + math.exp(-abs(z)))


def aggregate(labels, rng=None) -> AggregateResult:
    z = log_odds(labels)
    return AggregateResult(z, classify(z, rng), confidence(z))


def majority_vote(labels, rng: np.random.Generator | None = None) -> int:
    return classify(sum(check_label(l) for l in labels), rng)
