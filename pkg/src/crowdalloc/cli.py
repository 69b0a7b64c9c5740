"""Command-line front end: ``crowdalloc {analyze,simulate,calibrate}``.

Exit codes: 0 success, 2 configuration or validation error, 3 numerical
non-convergence in a required computation. Errors are reported on stderr
as a single JSON object.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

from .analysis import (
    AtomPdf,
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
from .config import Recipe, load_recipe
from .errors import ConfigError, ConvergenceError, DomainError
from .sim import run_experiment, sweep
from .tables import OutputRow, write_rows

log = logging.getLogger("crowdalloc")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _is_integer(x: float) -> bool:
    return float(x).is_integer()


def _require_section(recipe: Recipe, name: str):
    section = getattr(recipe, name)
    if section is None:
        raise ConfigError(f"missing required section '{name}'", key=name)
    return section


def analyze_rows(recipe: Recipe) -> list[OutputRow]:
    settings = _require_section(recipe, "analysis")
    f_v = population_vote_density(recipe.population, settings.grid)
    atomic = isinstance(f_v, AtomPdf)
    mom = moments(f_v, gamma_factor=settings.gamma_factor)
    eid, seed = recipe.experiment_id, recipe.seed

    def row(axis_name, axis_value, policy, metric, value):
        return OutputRow(eid, axis_name, float(axis_value), policy, metric, float(value), 0.0, seed)

    rows = [
        row("population", 0, "population", "mean", mom.mean),
        row("population", 0, "population", "variance", mom.variance),
        row("population", 0, "population", "support_bound", mom.support_bound),
    ]
    if mom.mean == 0 or mom.variance == 0:
        raise ConvergenceError("votes carry no information: the random walk has no drift")
    rho0, rho_approx = rho_root(f_v)
    rows += [
        row("population", 0, "population", "rho0", rho0),
        row("population", 0, "population", "rho0_approx", rho_approx),
    ]
    for r_u in settings.budgets:
        log.info("analysing r_u=%s", r_u)
        z_b = calibrate(f_v, r_u, tol=settings.tol)
        rep = bounded_walk(f_v, z_b, tol=settings.tol)
        if not rep.converged:
            raise ConvergenceError(f"bounded walk did not converge for r_u={r_u}")
        rows.append(row("r_u", r_u, "active", "z_threshold", z_b))
        if atomic:
            p = f_v.atom(1) / (f_v.atom(1) + f_v.atom(-1))
            if r_u == 1:
                steps, acc = rep.expected_steps, rep.exit_accuracy
            else:
                steps, acc = homogeneous_expected_steps(p, z_b), homogeneous_exit_accuracy(z_b)
            rows += [
                row("r_u", r_u, "active", "expected_steps", steps),
                row("r_u", r_u, "active", "accuracy", acc),
                row("r_u", r_u, "active_lattice", "expected_steps", rep.expected_steps),
                row("r_u", r_u, "active_lattice", "accuracy", rep.exit_accuracy),
                row("r_u", r_u, "active_mixture", "accuracy", lattice_mixture(f_v, r_u).exit_accuracy),
            ]
        else:
            rows += [
                row("r_u", r_u, "active", "expected_steps", rep.expected_steps),
                row("r_u", r_u, "active", "accuracy", rep.exit_accuracy),
                row("r_u", r_u, "active", "residual", rep.residual_mass),
            ]
        if mom.mean > 0:
            rows.append(row("r_u", r_u, "active_bound", "bound_upper", gambler_ruin_bound(mom, rho0, z_b)))
        if _is_integer(r_u):
            n = int(r_u)
            rows.append(row("r_u", r_u, "uniform", "accuracy", unbounded_accuracy(f_v, n)))
            if atomic and n % 2 == 1:
                rows.append(row("r_u", r_u, "uniform_closed_form", "accuracy", homogeneous_uniform_accuracy(p, n)))
            rows.append(row("r_u", r_u, "uniform_bound", "bound_lower_accuracy", 1.0 - chernoff_bound(mom, n)))
    return rows


def calibrate_rows(recipe: Recipe) -> list[OutputRow]:
    settings = _require_section(recipe, "analysis")
    f_v = population_vote_density(recipe.population, settings.grid)
    eid, seed = recipe.experiment_id, recipe.seed
    rows = []
    for r_u in settings.budgets:
        try:
            z_b = calibrate(f_v, r_u, tol=settings.tol)
        except (ConvergenceError, DomainError, ValueError) as exc:
            log.warning("r_u=%s flagged: %s", r_u, exc)
            z_b = steps = residual = math.nan
        else:
            rep = bounded_walk(f_v, z_b, tol=settings.tol)
            if isinstance(f_v, AtomPdf) and r_u != 1:
                p = f_v.atom(1) / (f_v.atom(1) + f_v.atom(-1))
                steps, residual = homogeneous_expected_steps(p, z_b), 0.0
            else:
                steps, residual = rep.expected_steps, rep.residual_mass
        for metric, value in (("z_threshold", z_b), ("expected_steps", steps), ("residual", residual)):
            rows.append(OutputRow(eid, "r_u", float(r_u), "active", metric, float(value), 0.0, seed))
    return rows


def simulate_rows(recipe: Recipe, jobs: int = 1) -> list[OutputRow]:
    settings = _require_section(recipe, "simulation")
    eid, seed = recipe.experiment_id, recipe.seed
    rows = []
    if settings.axis is None:
        table = []
        result = {}
        for pol in settings.policies:
            log.info("simulating policy %s", pol.value)
            result[pol] = run_experiment(settings.base.replace(policy=pol), jobs=jobs)
        table.append((0.0, result))
        axis = "none"
    else:
        log.info("sweeping %s over %s", settings.axis, settings.points)
        table = sweep(settings.base, settings.axis, settings.points, settings.policies, jobs=jobs)
        axis = settings.axis
    for point, result in table:
        for pol in settings.policies:
            stats = result[pol]
            if isinstance(stats, Exception):
                value, err = math.nan, 0.0
            else:
                value, err = stats.mean_accuracy, stats.standard_error
            rows.append(OutputRow(eid, axis, float(point), pol.value, "accuracy", value, err, seed))
    return rows


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="crowdalloc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("analyze", "density, random-walk, closed-form and bound tables"),
        ("simulate", "Monte Carlo comparison of allocation policies"),
        ("calibrate", "thresholds matching a per-task label budget"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="YAML recipe")
        p.add_argument("--out", help="output CSV (default: stdout)")
        p.add_argument("--seed", type=int, help="override the recipe seed")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
        p.add_argument("--quiet", action="store_true", help="only log errors")
    return parser


def _fail(code: int, kind: str, message: str, key=None) -> int:
    payload = {"error": kind, "message": message}
    if key is not None:
        payload["key"] = key
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        return _fail(EXIT_CONFIG, "usage", str(exc))
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(levelname)s %(message)s")
    if args.jobs < 1:
        return _fail(EXIT_CONFIG, "usage", "--jobs must be at least 1", key="jobs")
    try:
        recipe = load_recipe(args.config, args.seed)
        if args.command == "analyze":
            rows = analyze_rows(recipe)
        elif args.command == "calibrate":
            rows = calibrate_rows(recipe)
        else:
            rows = simulate_rows(recipe, jobs=args.jobs)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc), exc.key)
    except ConvergenceError as exc:
        return _fail(EXIT_NUMERIC, "convergence", str(exc))
    except DomainError as exc:
        return _fail(EXIT_CONFIG, "validation", str(exc))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_rows(rows, fh)
    else:
        write_rows(rows, sys.stdout)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
