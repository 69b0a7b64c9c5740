"""Round-based Monte Carlo simulation of the crowdsourcing process.

One replication draws the true labels, then spends the budget one label at a
time. In oracle mode every round brings a fresh worker whose skill is
revealed to the allocator, and the final labels come from the optimal
weighted vote with the true skills. In inference mode each worker stays for
``labels_per_worker`` consecutive rounds, never labels the same task twice,
and the allocator only sees the online mean-field estimates; final labels
come from a full mean-field fit.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import inference, policy
from .domain import ExperimentConfig, LabelStore, Mode, Policy, logit, make_rng
from .errors import AllocationError, CrowdAllocError

log = logging.getLogger(__name__)

LOGODDS_CLAMP = 50.0


@dataclass(frozen=True)
class RunResult:
    accuracy: float
    labels_per_task: np.ndarray
    mean_abs_logodds: float
    rounds_executed: int
    unassignable_workers: int
    labels: tuple = ()

    def histogram(self) -> np.ndarray:
        """Number of tasks that received 0, 1, 2, ... labels."""
        return np.bincount(self.labels_per_task)


@dataclass(frozen=True)
class ReplicationStats:
    mean_accuracy: float
    standard_error: float
    n: int

    @classmethod
    def from_accuracies(cls, accuracies) -> "ReplicationStats":
        acc = np.asarray(accuracies, dtype=float)
        if len(acc) < 2:
            raise ValueError("standard error needs at least two replications")
        return cls(float(acc.mean()), float(acc.std(ddof=1) / math.sqrt(len(acc))), len(acc))


def _clamped_logit(mu: float) -> float:
    if mu <= 0.0:
        return -LOGODDS_CLAMP
    if mu >= 1.0:
        return LOGODDS_CLAMP
    return min(max(math.log(mu) - math.log1p(-mu), -LOGODDS_CLAMP), LOGODDS_CLAMP)


def _choose(cfg, rng, z, counts, skill, mask):
    """Task for the current worker; ``skill`` is the true or estimated skill."""
    if cfg.random_ties:
        if cfg.policy is Policy.UNIFORM:
            score = counts
        elif cfg.policy is Policy.UNCERTAINTY:
            score = np.abs(z)
        else:
            score = -policy.expected_info_gain(z, skill)
        return policy.select_random_tie(score, mask, rng)
    if cfg.policy is Policy.UNIFORM:
        return policy.select_uniform(counts, mask)
    if cfg.policy is Policy.UNCERTAINTY:
        return policy.select_uncertainty(z, mask)
    return policy.select_greedy_ig(z, skill, mask)


def _classify_all(z, rng):
    pred = np.sign(z).astype(int)
    ties = pred == 0
    if ties.any():
        pred[ties] = np.where(rng.random(int(ties.sum())) < 0.5, 1, -1)
    return pred


def _run_oracle(cfg: ExperimentConfig, rng, truth, record_labels):
    m = cfg.num_tasks
    z = np.zeros(m)
    counts = np.zeros(m, dtype=np.int64)
    skills = cfg.population.sample(rng, cfg.budget)
    draws = rng.random(cfg.budget)
    sequence = []
    for b in range(cfg.budget):
        p = float(skills[b])
        task = _choose(cfg, rng, z, counts, p, None)
        label = truth[task] if draws[b] < p else -truth[task]
        z[task] += label * logit(p)
        counts[task] += 1
        if record_labels:
            sequence.append((task, b, int(label)))
    pred = _classify_all(z, rng)
    return z, counts, pred, cfg.budget, 0, sequence


def _run_inference(cfg: ExperimentConfig, rng, truth, record_labels):
    m = cfg.num_tasks
    prior = inference.Prior(cfg.prior_alpha, cfg.prior_beta)
    max_workers = cfg.budget + 1
    state = inference.initial_state(m, max_workers, prior)
    store = LabelStore()
    z = np.zeros(m)
    counts = np.zeros(m, dtype=np.int64)
    rounds = 0
    unassignable = 0
    worker = -1
    sequence = []
    while rounds < cfg.budget:
        worker += 1
        if worker >= max_workers:
            break
        skill = float(cfg.population.sample(rng))
        mask = np.ones(m, dtype=bool)
        assigned = 0
        while assigned < cfg.labels_per_worker and rounds < cfg.budget:
            try:
                task = _choose(cfg, rng, z, counts, state.skills[worker], mask)
            except AllocationError:
                if assigned == 0:
                    unassignable += 1
                break
            label = truth[task] if rng.random() < skill else -truth[task]
            store.add(task, worker, int(label))
            inference.online_update(state, store, (task, worker, int(label)), prior)
            z[task] = _clamped_logit(state.posteriors[task])
            mask[task] = False
            counts[task] += 1
            assigned += 1
            rounds += 1
            if record_labels:
                sequence.append((task, worker, int(label)))
    final = inference.fit(store, prior, num_tasks=m)
    post = final.posteriors
    with np.errstate(divide="ignore"):
        zf = np.log(post) - np.log1p(-post)
    pred = _classify_all(post - 0.5, rng)
    return zf, counts, pred, rounds, unassignable, sequence


def run_once(cfg: ExperimentConfig, replication_index: int, record_labels: bool = False) -> RunResult:
    """One replication of the allocation process; a pure function of its
    arguments."""
    rng = make_rng(cfg.seed, replication_index)
    truth = np.where(rng.random(cfg.num_tasks) < 0.5, 1, -1)
    runner = _run_oracle if cfg.mode is Mode.ORACLE else _run_inference
    z, counts, pred, rounds, unassignable, sequence = runner(cfg, rng, truth, record_labels)
    accuracy = float(np.mean(pred == truth))
    finite = np.clip(z, -LOGODDS_CLAMP, LOGODDS_CLAMP)
    return RunResult(
        accuracy=accuracy,
        labels_per_task=counts,
        mean_abs_logodds=float(np.mean(np.abs(finite))),
        rounds_executed=rounds,
        unassignable_workers=unassignable,
        labels=tuple(sequence),
    )


def _accuracy(args):
    cfg, index = args
    return run_once(cfg, index).accuracy


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, replication_indices=None) -> ReplicationStats:
    """Mean accuracy and its standard error over independent replications."""
    indices = list(range(cfg.replications)) if replication_indices is None else list(replication_indices)
    if len(indices) < 2:
        raise ValueError("at least two replications are needed for a standard error")
    work = [(cfg, i) for i in indices]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            accuracies = list(pool.map(_accuracy, work, chunksize=max(1, len(work) // (4 * jobs))))
    else:
        accuracies = [_accuracy(w) for w in work]
    return ReplicationStats.from_accuracies(accuracies)


AXES = ("tasks", "budget_ratio", "labels_per_worker")
SWEEP_POLICIES = (Policy.UNIFORM, Policy.UNCERTAINTY)


def config_at(base: ExperimentConfig, axis: str, point) -> ExperimentConfig:
    """``base`` moved to ``point`` along ``axis``.

    The tasks axis keeps the budget per task of ``base``; the budget-ratio
    axis sets the budget to ``point`` labels per task.
    """
    if axis == "tasks":
        ratio = base.budget / base.num_tasks
        m = int(point)
        return base.replace(num_tasks=m, budget=int(round(ratio * m)))
    if axis == "budget_ratio":
        return base.replace(budget=int(round(float(point) * base.num_tasks)))
    if axis == "labels_per_worker":
        return base.replace(labels_per_worker=int(point))
    raise ValueError(f"unknown sweep axis {axis!r}; expected one of {AXES}")


def sweep(base: ExperimentConfig, axis: str, points, policies=SWEEP_POLICIES, jobs: int = 1):
    """Replication statistics per sweep point and policy.

    Returns ``[(point, {policy: ReplicationStats | Exception})]``; a failing
    point is recorded and the sweep carries on.
    """
    if axis not in AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; expected one of {AXES}")
    if not points:
        raise ValueError("sweep needs at least one point")
    table = []
    for point in points:
        row = {}
        for pol in policies:
            try:
                cfg = config_at(base, axis, point).replace(policy=pol)
                row[Policy(pol)] = run_experiment(cfg, jobs=jobs)
            except (CrowdAllocError, ValueError) as exc:
                log.warning("sweep point %s=%s policy %s failed: %s", axis, point, pol, exc)
                row[Policy(pol)] = exc
        table.append((point, row))
    return table
