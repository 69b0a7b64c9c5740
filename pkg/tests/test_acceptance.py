"""Acceptance gate.

Each test checks one acceptance criterion at its stated tolerance and
runtime, and records a one-line verdict that is printed in the terminal
summary (``pytest tests/test_acceptance.py``).
"""

import math
import time
from itertools import combinations

import numpy as np
import pytest
import yaml

from crowdalloc.analysis import (
    bounded_walk,
    calibrate,
    chernoff_bound,
    gambler_ruin_bound,
    homogeneous_exit_accuracy,
    homogeneous_expected_steps,
    homogeneous_uniform_accuracy,
    lattice_mixture,
    moments,
    population_vote_density,
    rho_root,
    unbounded_accuracy,
)
from crowdalloc.cli import main
from crowdalloc.domain import Beta, Dirac, ExperimentConfig, LabelStore, Mode, Policy, make_rng
from crowdalloc.inference import Prior, e_step, fit, initial_state, m_step, online_update
from crowdalloc.policy import expected_info_gain, select_greedy_ig, select_uncertainty
from crowdalloc.sim import run_experiment, run_once
from oracles import enumerate_majority, mc_bounded_walk, mc_uniform_accuracy, mean_field_exact, ruin_duration

SKILLS = [0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95]
ODD = [1, 3, 5, 7, 9, 11]


class Gate:
    def __init__(self, number, title, limit, record):
        self.number, self.title, self.limit, self.record = number, title, limit, record
        self.failures = []
        self.notes = []
        self.start = time.perf_counter()
        record("acceptance", (number, f"criterion {number} FAIL  {title}: did not finish"))

    def check(self, ok, message):
        if not ok:
            self.failures.append(message)

    def note(self, message):
        self.notes.append(message)

    def finish(self):
        elapsed = time.perf_counter() - self.start
        self.check(elapsed < self.limit, f"runtime {elapsed:.1f}s over the {self.limit:.0f}s limit")
        verdict = "PASS" if not self.failures else "FAIL"
        detail = "; ".join(self.failures[:3] or self.notes)
        line = f"criterion {self.number} {verdict}  {self.title} ({elapsed:.1f}s)" + (f": {detail}" if detail else "")
        self.record("acceptance", (self.number, line))
        print(line)
        assert not self.failures, line


@pytest.fixture
def gate(record_property):
    def make(number, title, limit):
        return Gate(number, title, limit, record_property)

    return make


def test_criterion_1_policy_equivalence(gate):
    g = gate(1, "greedy information gain equals uncertainty sampling", 10)
    rng = make_rng(1001)
    checked = agree = 0
    while checked < 10_000:
        n = int(rng.integers(1, 60))
        z = rng.uniform(-12, 12, n)
        p = float(rng.uniform(0.01, 0.99))
        eligible = rng.random(n) < 0.8
        if not eligible.any():
            continue
        a = np.abs(z)[eligible]
        if np.sum(a == a.min()) > 1:
            continue
        checked += 1
        agree += select_greedy_ig(z, p, eligible) == select_uncertainty(z, eligible)
    g.check(agree == checked, f"{checked - agree} of {checked} instances disagree")
    runs = 0
    for pop in (Beta(4, 2), Dirac(0.8), Beta(1.5, 1.5)):
        for seed in range(10):
            base = dict(num_tasks=50, budget=500, population=pop, mode=Mode.ORACLE, replications=2, seed=seed)
            a = run_once(ExperimentConfig(policy=Policy.UNCERTAINTY, **base), 0, record_labels=True)
            b = run_once(ExperimentConfig(policy=Policy.GREEDY_IG, **base), 0, record_labels=True)
            same = (
                a.labels == b.labels
                and a.accuracy == b.accuracy
                and a.mean_abs_logodds == b.mean_abs_logodds
                and np.array_equal(a.labels_per_task, b.labels_per_task)
            )
            g.check(same, f"oracle runs differ for {pop} seed {seed}")
            runs += 1
    g.note(f"{checked} instances, {runs} end-to-end oracle runs identical")
    g.finish()


def test_criterion_2_information_gain_shape(gate):
    g = gate(2, "expected information gain is symmetric with its peak at z = 0", 5)
    z = np.linspace(-10, 10, 2001)
    worst = 0.0
    for p in SKILLS:
        gains = expected_info_gain(z, p)
        worst = max(worst, float(np.max(np.abs(gains - gains[::-1]))))
        peak = expected_info_gain(0.0, p)
        g.check(bool(np.all(peak > gains[z != 0])), f"peak not at zero for p={p}")
    g.check(worst < 1e-12, f"asymmetry {worst:.2e}")
    g.note(f"max asymmetry {worst:.1e}")
    g.finish()


def test_criterion_3_homogeneous_closed_forms(gate):
    g = gate(3, "homogeneous closed forms match enumeration and first-step analysis", 5)
    worst_acc = worst_steps = 0.0
    for p in SKILLS:
        for r in ODD:
            worst_acc = max(worst_acc, abs(homogeneous_uniform_accuracy(p, r) - enumerate_majority(p, r)))
        w = math.log(p / (1 - p))
        for a in range(1, 7):
            worst_steps = max(worst_steps, abs(homogeneous_expected_steps(p, a * w) - ruin_duration(p, a)))
    g.check(worst_acc <= 1e-12, f"uniform accuracy off by {worst_acc:.2e}")
    g.check(worst_steps <= 1e-9, f"expected steps off by {worst_steps:.2e}")
    g.note(f"max errors {worst_acc:.1e} (accuracy), {worst_steps:.1e} (steps)")
    g.finish()


def test_criterion_4_theory_matches_monte_carlo(gate):
    g = gate(4, "random-walk theory matches Monte Carlo within 3 SE", 120)
    worst = 0.0
    for k, pop in enumerate((Dirac(0.8), Beta(4, 2))):
        f_v = population_vote_density(pop)
        for r_u in (3, 11):
            z_b = calibrate(f_v, r_u)
            rep = bounded_walk(f_v, z_b)
            steps, se_steps, acc, se_acc = mc_bounded_walk(pop, z_b, 100_000, make_rng(1004, k, r_u))
            uni, se_uni = mc_uniform_accuracy(pop, r_u, 100_000, make_rng(1004, k, r_u, 1))
            for name, theory, mc, se in (
                ("E(r_a)", rep.expected_steps, steps, se_steps),
                ("exit accuracy", rep.exit_accuracy, acc, se_acc),
                ("uniform accuracy", unbounded_accuracy(f_v, r_u), uni, se_uni),
            ):
                score = abs(theory - mc) / se
                worst = max(worst, score)
                g.check(score < 3, f"{pop} r_u={r_u} {name}: {theory:.6g} vs {mc:.6g} ({score:.1f} SE)")
    g.note(f"largest deviation {worst:.2f} SE")
    g.finish()


def test_criterion_5_active_beats_uniform_homogeneous(gate):
    g = gate(5, "calibrated active accuracy >= uniform accuracy, homogeneous crowds", 60)
    margin = math.inf
    for p in SKILLS:
        f_v = population_vote_density(Dirac(p))
        for r in ODD[1:]:
            uniform = homogeneous_uniform_accuracy(p, r)
            threshold = homogeneous_exit_accuracy(calibrate(f_v, r))
            mixture = lattice_mixture(f_v, r).exit_accuracy
            margin = min(margin, threshold - uniform, mixture - uniform)
            g.check(threshold >= uniform, f"p={p} r_u={r}: threshold reading {threshold:.6f} < {uniform:.6f}")
            g.check(mixture >= uniform, f"p={p} r_u={r}: lattice reading {mixture:.6f} < {uniform:.6f}")
    g.note(f"smallest margin {margin:.2e}")
    g.finish()


def test_criterion_6_bound_dominance(gate):
    g = gate(6, "both bounds dominate the exact values; ruin bound within 2x", 60)
    points = 0
    d = population_vote_density(Dirac(0.8))
    md, rho_d = moments(d), rho_root(d)[0]
    for a in range(1, 11):
        z = a * d.step
        g.check(gambler_ruin_bound(md, rho_d, z) >= homogeneous_expected_steps(0.8, z), f"Dirac ruin bound at {a} steps")
        points += 1
    for r in range(1, 16):
        g.check(1 - chernoff_bound(md, r) <= unbounded_accuracy(d, r), f"Dirac accuracy bound r={r}")
        points += 1
    b = population_vote_density(Beta(4, 2))
    mb, rho_b = moments(b), rho_root(b)[0]
    cutoff = mb.support_bound / mb.mean
    worst_ratio = 0.0
    for r in range(2, 21):
        z = calibrate(b, r)
        exact = bounded_walk(b, z).expected_steps
        bound = gambler_ruin_bound(mb, rho_b, z)
        g.check(bound >= exact, f"Beta ruin bound r_u={r}")
        if r > cutoff:
            worst_ratio = max(worst_ratio, bound / exact)
            g.check(bound <= 2 * exact, f"Beta ruin bound r_u={r} is {bound / exact:.2f}x")
        g.check(1 - chernoff_bound(mb, r) <= unbounded_accuracy(b, r), f"Beta accuracy bound r={r}")
        points += 2
    g.note(f"{points} points; gamma/E = {cutoff:.2f}; worst bound/exact above it {worst_ratio:.3f}")
    g.finish()


def _random_records(rng, n_tasks=10, n_workers=7, density=0.6):
    records = [
        (t, w, int(rng.choice([1, -1])))
        for t in range(n_tasks)
        for w in range(n_workers)
        if rng.random() < density
    ]
    return [records[i] for i in rng.permutation(len(records))]


def test_criterion_7_mean_field(gate):
    g = gate(7, "mean-field flip symmetry, hand iteration and online replay", 30)
    prior = Prior(4, 2)
    for seed in range(100):
        records = _random_records(make_rng(1007, seed))
        store = LabelStore(records)
        flipped = store.flipped()
        for iters in range(1, 6):
            a = fit(store, prior, tol=1e-300, max_iter=iters)
            b = fit(flipped, prior, tol=1e-300, max_iter=iters)
            g.check(np.allclose(b.posteriors, 1 - a.posteriors, atol=1e-12, rtol=0), f"flip posteriors store {seed}")
            g.check(np.allclose(b.skills, a.skills, atol=1e-12, rtol=0), f"flip skills store {seed}")
    toy = [(0, 0, 1), (0, 1, 1), (1, 0, 1), (1, 1, -1)]
    history, skills = mean_field_exact(toy, 4, 2, 2)
    state = fit(LabelStore(toy), prior, tol=1e-300, max_iter=2)
    err = max(
        max(abs(state.posteriors[t] - float(history[-1][t])) for t in (0, 1)),
        max(abs(state.skills[w] - float(skills[w])) for w in (0, 1)),
    )
    g.check(err <= 1e-9, f"hand iteration off by {err:.2e}")
    for seed in range(100):
        records = _random_records(make_rng(1107, seed), 8, 6)
        store = LabelStore()
        state = initial_state(8, 6, prior)
        for rec in records:
            store.add(*rec)
            before = state.skills.copy()
            online_update(state, store, rec, prior)
            task, worker, _ = rec
            ok = abs(state.posteriors[task] - e_step(store, before, 8)[task]) <= 1e-12
            ok &= abs(state.skills[worker] - m_step(store, state.posteriors, prior, 6)[worker]) <= 1e-12
            g.check(ok, f"online step differs from the full step, sequence {seed}")
        first = fit(store, prior, tol=1e-300, max_iter=1, init_skills=state.skills, num_tasks=8, num_workers=6)
        g.check(np.allclose(e_step(store, state.skills, 8), first.posteriors, atol=1e-9, rtol=0), f"replay sequence {seed}")
    g.note("100 stores x 5 iterations, toy to 1e-9, 100 arrival sequences")
    g.finish()


def _combined(a, b):
    return math.hypot(a.standard_error, b.standard_error)


def test_criterion_8_desk_scale_reproduction(gate):
    g = gate(8, "desk-scale policy gap, flatness in M and trend in |N_j|", 600)
    base = ExperimentConfig(
        num_tasks=200, budget=2000, population=Beta(4, 2), labels_per_worker=10,
        policy=Policy.UNIFORM, mode=Mode.INFERENCE, replications=100, seed=2014,
    )

    def stats(**changes):
        return run_experiment(base.replace(**changes))

    uni, act = stats(policy=Policy.UNIFORM), stats(policy=Policy.UNCERTAINTY)
    gap_a = (act.mean_accuracy - uni.mean_accuracy) / _combined(act, uni)
    g.check(gap_a > 2, f"(a) gap only {gap_a:.1f} SE")

    gaps = {}
    for m in (20, 100, 500):
        u = stats(num_tasks=m, budget=10 * m, policy=Policy.UNIFORM)
        a = stats(num_tasks=m, budget=10 * m, policy=Policy.UNCERTAINTY)
        gaps[m] = (a.mean_accuracy - u.mean_accuracy, _combined(a, u))
    spread = max(abs(gaps[i][0] - gaps[j][0]) / math.hypot(gaps[i][1], gaps[j][1]) for i, j in combinations(gaps, 2))
    g.check(spread < 3, f"(b) gap varies by {spread:.1f} SE across M")

    few = stats(labels_per_worker=2, policy=Policy.UNCERTAINTY)
    many = stats(labels_per_worker=20, policy=Policy.UNCERTAINTY)
    trend = (many.mean_accuracy - few.mean_accuracy) / _combined(many, few)
    g.check(trend > 2, f"(c) |N_j| trend only {trend:.1f} SE")
    g.note(
        f"(a) {act.mean_accuracy:.4f} vs {uni.mean_accuracy:.4f} = {gap_a:.1f} SE; "
        f"(b) gaps {', '.join(f'M={m}: {v[0]:.4f}' for m, v in gaps.items())}, max spread {spread:.1f} SE; "
        f"(c) {many.mean_accuracy:.4f} vs {few.mean_accuracy:.4f} = {trend:.1f} SE"
    )
    g.finish()


def test_criterion_9_determinism(gate, tmp_path):
    g = gate(9, "repeated CLI invocations are byte-identical", 120)
    recipe = {
        "experiment_id": "determinism",
        "seed": 77,
        "population": {"kind": "beta", "alpha": 4, "beta": 2},
        "analysis": {"budget": [2, 3, 7.5], "grid": {"half_width": 12, "step": 0.01}},
        "simulation": {
            "num_tasks": 30, "budget": 300, "labels_per_worker": 5, "replications": 6,
            "policies": ["uniform", "uncertainty", "greedy_ig"],
            "sweep": {"axis": "budget_ratio", "points": [2, 10]},
        },
    }
    path = tmp_path / "recipe.yaml"
    path.write_text(yaml.safe_dump(recipe))
    for command in ("analyze", "calibrate", "simulate"):
        outputs = []
        for i, jobs in enumerate(("1", "1", "2")):
            out = tmp_path / f"{command}{i}.csv"
            code = main([command, "--config", str(path), "--out", str(out), "--jobs", jobs, "--quiet"])
            g.check(code == 0, f"{command} exited with {code}")
            outputs.append(out.read_bytes())
        g.check(len(set(outputs)) == 1, f"{command} output differs between runs")
    g.note("analyze, calibrate and simulate each run three times, serial and parallel")
    g.finish()
