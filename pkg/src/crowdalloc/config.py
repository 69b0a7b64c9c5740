"""YAML experiment recipes.

A recipe has a header (``experiment_id``, ``seed``, ``population``) and an
``analysis`` and/or ``simulation`` section::

    experiment_id: fig5-desk
    seed: 2014
    population: {kind: beta, alpha: 4, beta: 2}
    analysis:
      budget: [2, 3, 5, 11, 20]      # labels per task
      grid: {half_width: 12, step: 0.005}
      gamma_factor: 5
    simulation:
      num_tasks: 200
      budget: 2000                   # total labels
      labels_per_worker: 10
      mode: inference                # or oracle
      replications: 100
      policies: [uniform, uncertainty]
      sweep: {axis: budget_ratio, points: [2, 10, 20]}

Unknown keys anywhere are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .analysis.density import DEFAULT_HALF_WIDTH, DEFAULT_STEP, GridSpec
from .domain import Beta, Dirac, Empirical, ExperimentConfig, Mode, Policy, SkillDistribution
from .errors import ConfigError, CrowdAllocError
from .sim import AXES

TOP_KEYS = {"experiment_id", "seed", "population", "analysis", "simulation"}
ANALYSIS_KEYS = {"budget", "grid", "gamma_factor", "tol"}
SIMULATION_KEYS = {"num_tasks", "budget", "labels_per_worker", "mode", "prior", "replications", "policies", "sweep", "random_ties"}


@dataclass(frozen=True)
class AnalysisSettings:
    budgets: tuple
    grid: GridSpec = field(default_factory=GridSpec)
    gamma_factor: float = 5.0
    tol: float = 1e-6


@dataclass(frozen=True)
class SimulationSettings:
    base: ExperimentConfig
    policies: tuple
    axis: str | None = None
    points: tuple = ()


@dataclass(frozen=True)
class Recipe:
    experiment_id: str
    seed: int
    population: SkillDistribution
    analysis: AnalysisSettings | None = None
    simulation: SimulationSettings | None = None


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing required key '{where}{key}'", key=f"{where}{key}")
    return section[key]


def _check_keys(section, allowed, where):
    if not isinstance(section, dict):
        raise ConfigError(f"'{where.rstrip('.') or 'config'}' must be a mapping", key=where.rstrip(".") or None)
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown key '{where}{unknown[0]}'", key=f"{where}{unknown[0]}")


def parse_population(entry) -> SkillDistribution:
    if not isinstance(entry, dict):
        raise ConfigError("'population' must be a mapping", key="population")
    kind = _require(entry, "kind", "population.")
    try:
        if kind == "beta":
            _check_keys(entry, {"kind", "alpha", "beta"}, "population.")
            return Beta(float(_require(entry, "alpha", "population.")), float(_require(entry, "beta", "population.")))
        if kind == "dirac":
            _check_keys(entry, {"kind", "p"}, "population.")
            return Dirac(float(_require(entry, "p", "population.")))
        if kind == "empirical":
            _check_keys(entry, {"kind", "points"}, "population.")
            return Empirical(tuple(tuple(pt) for pt in _require(entry, "points", "population.")))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid population: {exc}", key="population") from exc
    raise ConfigError(f"unknown population kind {kind!r}", key="population.kind")


def _positive_list(value, key):
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"'{key}' must be a non-empty list", key=key)
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"'{key}' must contain numbers", key=key) from exc


def _parse_analysis(section) -> AnalysisSettings:
    _check_keys(section, ANALYSIS_KEYS, "analysis.")
    budgets = _positive_list(_require(section, "budget", "analysis."), "analysis.budget")
    grid = section.get("grid", {})
    _check_keys(grid, {"half_width", "step"}, "analysis.grid.")
    grid_spec = GridSpec(float(grid.get("half_width", DEFAULT_HALF_WIDTH)), float(grid.get("step", DEFAULT_STEP)))
    if not (grid_spec.step > 0 and grid_spec.half_width > grid_spec.step):
        raise ConfigError("grid needs 0 < step < half_width", key="analysis.grid")
    gamma_factor = float(section.get("gamma_factor", 5.0))
    tol = float(section.get("tol", 1e-6))
    if gamma_factor <= 0 or tol <= 0:
        raise ConfigError("gamma_factor and tol must be positive", key="analysis")
    return AnalysisSettings(budgets, grid_spec, gamma_factor, tol)


def _parse_simulation(section, population, seed) -> SimulationSettings:
    _check_keys(section, SIMULATION_KEYS, "simulation.")
    num_tasks = _require(section, "num_tasks", "simulation.")
    budget = _require(section, "budget", "simulation.")
    policies = section.get("policies", ["uniform", "uncertainty"])
    try:
        policies = tuple(Policy(p) for p in policies)
    except ValueError as exc:
        raise ConfigError(f"unknown policy: {exc}", key="simulation.policies") from exc
    if not policies:
        raise ConfigError("at least one policy is required", key="simulation.policies")
    try:
        mode = Mode(section.get("mode", "inference"))
    except ValueError as exc:
        raise ConfigError(str(exc), key="simulation.mode") from exc
    prior = section.get("prior")
    alpha = beta = None
    if prior is not None:
        _check_keys(prior, {"alpha", "beta"}, "simulation.prior.")
        alpha = float(_require(prior, "alpha", "simulation.prior."))
        beta = float(_require(prior, "beta", "simulation.prior."))
    replications = section.get("replications", 100)
    if not isinstance(replications, int) or replications < 2:
        raise ConfigError("replications must be an integer >= 2", key="simulation.replications")
    axis, points = None, ()
    if "sweep" in section:
        sw = section["sweep"]
        _check_keys(sw, {"axis", "points"}, "simulation.sweep.")
        axis = _require(sw, "axis", "simulation.sweep.")
        if axis not in AXES:
            raise ConfigError(f"sweep axis must be one of {AXES}", key="simulation.sweep.axis")
        points = _positive_list(_require(sw, "points", "simulation.sweep."), "simulation.sweep.points")
    try:
        base = ExperimentConfig(
            num_tasks=num_tasks,
            budget=budget,
            population=population,
            labels_per_worker=section.get("labels_per_worker", 10),
            policy=policies[0],
            mode=mode,
            prior_alpha=alpha,
            prior_beta=beta,
            replications=replications,
            seed=seed,
            random_ties=bool(section.get("random_ties", False)),
        )
    except ConfigError as exc:
        raise ConfigError(str(exc), key=f"simulation.{exc.key}" if exc.key else "simulation") from exc
    return SimulationSettings(base, policies, axis, points)


def parse_recipe(data, seed_override: int | None = None) -> Recipe:
    _check_keys(data, TOP_KEYS, "")
    experiment_id = str(data.get("experiment_id", "experiment"))
    seed = data.get("seed", 0) if seed_override is None else seed_override
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be a 64-bit non-negative integer", key="seed")
    try:
        population = parse_population(_require(data, "population", ""))
    except CrowdAllocError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), key="population") from exc
    analysis = _parse_analysis(data["analysis"]) if "analysis" in data else None
    simulation = _parse_simulation(data["simulation"], population, seed) if "simulation" in data else None
    return Recipe(experiment_id, seed, population, analysis, simulation)


def load_recipe(path, seed_override: int | None = None) -> Recipe:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", key=None) from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    return parse_recipe(data, seed_override)
