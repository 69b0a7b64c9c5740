"""Core data types: labels, skill populations, workers, label stores and
experiment configurations."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError, DuplicateLabelError

POSITIVE = 1
NEGATIVE = -1


def check_label(value) -> int:
    """Return ``value`` as a plain int label, rejecting anything but +1/-1."""
    if value not in (POSITIVE, NEGATIVE):
        raise DomainError(f"label must be +1 or -1, got {value!r}")
    return int(value)


def make_rng(seed: int, *stream) -> np.random.Generator:
    """Independent generator for ``(seed, *stream)``.

    Streams derived from different keys do not overlap, and a replication's
    stream does not depend on which other replications were run.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream)))


# ---------------------------------------------------------------------------
# Skill populations
# ---------------------------------------------------------------------------


class SkillDistribution:
    """Population law of worker accuracies."""

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class Beta(SkillDistribution):
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError(f"Beta parameters must be positive, got ({self.alpha}, {self.beta})")

    def sample(self, rng, size=None):
        return rng.beta(self.alpha, self.beta, size)

    def pdf(self, p):
        from scipy import stats

        return stats.beta(self.alpha, self.beta).pdf(p)

    @property
    def mean(self):
        return self.alpha / (self.alpha + self.beta)


@dataclass(frozen=True)
class Dirac(SkillDistribution):
    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise DomainError(f"Dirac skill must lie strictly inside (0, 1), got {self.p}")

    def sample(self, rng, size=None):
        if size is None:
            return float(self.p)
        return np.full(size, float(self.p))

    @property
    def mean(self):
        return self.p


@dataclass(frozen=True)
class Empirical(SkillDistribution):
    """Finite population given as ``(skill, mass)`` pairs."""

    points: tuple

    def __post_init__(self):
        pts = tuple((float(p), float(m)) for p, m in self.points)
        if not pts:
            raise DomainError("empirical distribution needs at least one point")
        for p, m in pts:
            if not 0.0 < p < 1.0:
                raise DomainError(f"empirical skill {p} outside (0, 1)")
            if m < 0:
                raise DomainError(f"negative mass {m}")
        total = sum(m for _, m in pts)
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"empirical masses sum to {total}, expected 1")
        object.__setattr__(self, "points", pts)

    @property
    def skills(self):
        return np.array([p for p, _ in self.points])

    @property
    def masses(self):
        return np.array([m for _, m in self.points])

    def sample(self, rng, size=None):
        return rng.choice(self.skills, size=size, p=self.masses)

    @property
    def mean(self):
        return float(np.dot(self.skills, self.masses))


def sample_skill(dist: SkillDistribution, rng: np.random.Generator) -> float:
    return float(dist.sample(rng))


def generate_label(true_label: int, p: float, rng: np.random.Generator) -> int:
    """Label emitted by a worker of skill ``p`` on a task whose truth is ``true_label``."""
    return true_label if rng.random() < p else -true_label


@dataclass(frozen=True)
class Worker:
    id: int
    skill: float

    def __post_init__(self):
        if not 0.0 < self.skill < 1.0:
            raise DomainError(f"worker skill must lie in (0, 1), got {self.skill}")


# ---------------------------------------------------------------------------
# Label storage
# ---------------------------------------------------------------------------


class LabelStore:
    """Sparse (task, worker, label) records with per-task and per-worker views.

    Task and worker ids are dense non-negative integers. A (task, worker)
    pair may be labeled at most once.
    """

    def __init__(self, records: Sequence = ()):
        self.records: list[tuple[int, int, int]] = []
        self.task_index: dict[int, list[tuple[int, int]]] = {}
        self.worker_index: dict[int, list[tuple[int, int]]] = {}
        self._pairs: set[tuple[int, int]] = set()
        for task, worker, label in records:
            self.add(task, worker, label)

    def add(self, task: int, worker: int, label: int) -> None:
        label = check_label(label)
        task, worker = int(task), int(worker)
        if task < 0 or worker < 0:
            raise DomainError("task and worker ids must be non-negative")
        if (task, worker) in self._pairs:
            raise DuplicateLabelError(f"worker {worker} already labeled task {task}")
        self._pairs.add((task, worker))
        self.records.append((task, worker, label))
        self.task_index.setdefault(task, []).append((worker, label))
        self.worker_index.setdefault(worker, []).append((task, label))

    def __len__(self):
        return len(self.records)

    def __contains__(self, pair):
        return tuple(pair) in self._pairs

    def has_labeled(self, worker: int, task: int) -> bool:
        return (task, worker) in self._pairs

    @property
    def num_tasks(self) -> int:
        """One past the largest task id seen."""
        return max(self.task_index, default=-1) + 1

    @property
    def num_workers(self) -> int:
        return max(self.worker_index, default=-1) + 1

    def arrays(self):
        """Records as ``(tasks, workers, labels)`` integer arrays."""
        if not self.records:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty.copy(), empty.copy()
        rec = np.asarray(self.records, dtype=np.int64)
        return rec[:, 0], rec[:, 1], rec[:, 2]

    def rebuilt(self) -> "LabelStore":
        return LabelStore(self.records)

    def is_consistent(self) -> bool:
        other = self.rebuilt()
        return other.task_index == self.task_index and other.worker_index == self.worker_index

    def flipped(self) -> "LabelStore":
        return LabelStore([(t, w, -l) for t, w, l in self.records])


@dataclass
class BeliefState:
    """Per-task log-odds and posteriors plus per-worker skill estimates."""

    task_logodds: np.ndarray
    worker_estimates: dict = field(default_factory=dict)
    task_posteriors: np.ndarray | None = None

    def sync_posteriors(self):
        from scipy.special import expit

        self.task_posteriors = expit(self.task_logodds)
        return self


# ---------------------------------------------------------------------------
# Experiment configuration
# ---------------------------------------------------------------------------


class Policy(str, enum.Enum):
    UNIFORM = "uniform"
    UNCERTAINTY = "uncertainty"
    GREEDY_IG = "greedy_ig"


class Mode(str, enum.Enum):
    ORACLE = "oracle"
    INFERENCE = "inference"


@dataclass(frozen=True)
class ExperimentConfig:
    num_tasks: int
    budget: int
    population: SkillDistribution
    labels_per_worker: int = 10
    policy: Policy = Policy.UNCERTAINTY
    mode: Mode = Mode.ORACLE
    prior_alpha: float | None = None
    prior_beta: float | None = None
    replications: int = 100
    seed: int = 0
    random_ties: bool = False

    def __post_init__(self):
        object.__setattr__(self, "policy", Policy(self.policy))
        object.__setattr__(self, "mode", Mode(self.mode))
        for key in ("num_tasks", "budget", "labels_per_worker", "replications"):
            value = getattr(self, key)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{key} must be a positive integer, got {value!r}", key=key)
        if self.policy is Policy.UNIFORM and self.budget < self.num_tasks:
            raise ConfigError("uniform allocation needs budget >= num_tasks", key="budget")
        if self.labels_per_worker > self.num_tasks:
            raise ConfigError("labels_per_worker cannot exceed num_tasks", key="labels_per_worker")
        if self.mode is Mode.INFERENCE:
            alpha, beta = self.prior_alpha, self.prior_beta
            if alpha is None or beta is None:
                if not isinstance(self.population, Beta):
                    raise ConfigError("inference mode needs an explicit prior for non-Beta populations", key="prior")
                alpha, beta = self.population.alpha, self.population.beta
            if not (alpha > 0 and beta > 0):
                raise ConfigError("prior parameters must be positive", key="prior")
            # a prior mean above 1/2 fixes the global label orientation
            if not alpha > beta:
                raise ConfigError("inference prior needs alpha > beta", key="prior")
            object.__setattr__(self, "prior_alpha", float(alpha))
            object.__setattr__(self, "prior_beta", float(beta))

    @property
    def prior(self):
        return (self.prior_alpha, self.prior_beta)

    def replace(self, **changes) -> "ExperimentConfig":
        from dataclasses import replace

        return replace(self, **changes)


def logit(p):
    """log(p) - log(1-p), accurate near 1/2 and near the ends."""
    if np.ndim(p) == 0:
        p = float(p)
        if not 0.0 < p < 1.0:
            raise DomainError(f"skill {p} gives an infinite weight")
        return math.log(p) - math.log1p(-p)
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise DomainError("skills must lie strictly inside (0, 1)")
    return np.log(p) - np.log1p(-p)
