"""Approximate mean-field estimation of worker skills and task labels.

Workers follow the one-coin model: a worker of skill ``p`` reports the true
label with probability ``p``. Skills carry a Beta(alpha, beta) prior. The
algorithm alternates

* an E-step, where each task posterior is the normalised product of the
  likelihoods of its labels under the current skill estimates, and
* an M-step, where each skill is the prior-smoothed average agreement of the
  worker with the current task posteriors.

Only ``mu_i(+1)`` is stored; ``mu_i(-1) = 1 - mu_i(+1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .domain import LabelStore


@dataclass(frozen=True)
class Prior:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"prior parameters must be positive, got ({self.alpha}, {self.beta})")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)


@dataclass
class MeanFieldState:
    posteriors: np.ndarray
    skills: np.ndarray
    iteration_count: int = 0
    converged: bool = False

    def ensure_size(self, num_tasks: int, num_workers: int, prior: Prior) -> None:
        """Grow the arrays to hold new tasks (at 1/2) and workers (at the prior mean)."""
        if num_tasks > len(self.posteriors):
            pad = np.full(num_tasks - len(self.posteriors), 0.5)
            self.posteriors = np.concatenate([self.posteriors, pad])
        if num_workers > len(self.skills):
            pad = np.full(num_workers - len(self.skills), prior.mean)
            self.skills = np.concatenate([self.skills, pad])

    @property
    def logodds(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.posteriors) - np.log1p(-self.posteriors)


def initial_state(num_tasks: int, num_workers: int, prior: Prior) -> MeanFieldState:
    return MeanFieldState(np.full(num_tasks, 0.5), np.full(num_workers, prior.mean))


def _weights(skills):
    skills = np.asarray(skills, dtype=float)
    return np.log(skills) - np.log1p(-skills)


def e_step(store: LabelStore, skills, num_tasks: int | None = None) -> np.ndarray:
    """Task posteriors ``mu_i(+1)`` given per-worker skill estimates.

    The two unnormalised products are compared in log space, which reduces
    to a logistic of the weighted label sum; tasks without labels get 1/2.
    """
    tasks, workers, labels = store.arrays()
    if num_tasks is None:
        num_tasks = store.num_tasks
    w = _weights(skills)
    z = np.bincount(tasks, weights=labels * w[workers], minlength=num_tasks)
    return expit(z)


def m_step(store: LabelStore, posteriors, prior: Prior, num_workers: int | None = None) -> np.ndarray:
    tasks, workers, labels = store.arrays()
    if num_workers is None:
        num_workers = store.num_workers
    posteriors = np.asarray(posteriors, dtype=float)
    mu = posteriors[tasks]
    agree = np.where(labels > 0, mu, 1.0 - mu)
    sums = np.bincount(workers, weights=agree, minlength=num_workers)
    counts = np.bincount(workers, minlength=num_workers)
    return (sums + prior.alpha) / (counts + prior.alpha + prior.beta)


def fit(
    store: LabelStore,
    prior: Prior,
    tol: float = 1e-6,
    max_iter: int = 100,
    init_skills=None,
    num_tasks: int | None = None,
    num_workers: int | None = None,
) -> MeanFieldState:
    """Alternate E and M steps until the posteriors stop moving.

    Starts from every skill at the prior mean unless ``init_skills`` is
    given. Stops when the largest change in any ``mu_i(+1)`` is at most
    ``tol`` (``converged=True``) or after ``max_iter`` iterations.
    """
    if tol <= 0 or max_iter < 1:
        raise ValueError("need tol > 0 and max_iter >= 1")
    num_tasks = store.num_tasks if num_tasks is None else num_tasks
    num_workers = store.num_workers if num_workers is None else num_workers
    if init_skills is None:
        skills = np.full(num_workers, prior.mean)
    else:
        skills = np.array(init_skills, dtype=float)
    posteriors = np.full(num_tasks, 0.5)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        new = e_step(store, skills, num_tasks)
        skills = m_step(store, new, prior, num_workers)
        delta = float(np.max(np.abs(new - posteriors))) if num_tasks else 0.0
        posteriors = new
        if delta <= tol:
            converged = True
            break
    return MeanFieldState(posteriors, skills, it, converged)


def online_update(state: MeanFieldState, store: LabelStore, new_record, prior: Prior) -> MeanFieldState:
    """Refresh the state after one new label, in place.

    The posterior of the labeled task is recomputed from the current skills,
    then the skill of the labeling worker from the current posteriors.
    Every other entry is left as it was. ``new_record`` must already be in
    ``store``.
    """
    task, worker, _ = new_record
    state.ensure_size(task + 1, worker + 1, prior)
    skills = state.skills
    z = 0.0
    for j, label in store.task_index[task]:
        p = skills[j]
        z += label * (math.log(p) - math.log1p(-p))
    state.posteriors[task] = expit(z)

    posteriors = state.posteriors
    agree = 0.0
    done = store.worker_index[worker]
    for i, label in done:
        agree += posteriors[i] if label > 0 else 1.0 - posteriors[i]
    skills[worker] = (agree + prior.alpha) / (len(done) + prior.alpha + prior.beta)
    state.iteration_count += 1
    return state
