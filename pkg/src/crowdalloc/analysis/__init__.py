"""Density transforms, random-walk computations, closed forms and bounds."""

from .bounds import chernoff_bound, gambler_ruin_bound, rho_root
from .closed_form import (
    homogeneous_exit_accuracy,
    homogeneous_expected_steps,
    homogeneous_uniform_accuracy,
)
from .density import (
    AtomPdf,
    GridPdf,
    GridSpec,
    MomentSummary,
    convolve,
    moments,
    population_vote_density,
    vote_density,
    weight_density,
)
from .walk import (
    LatticeMixture,
    WalkReport,
    bounded_walk,
    calibrate,
    lattice_mixture,
    unbounded_accuracy,
    unbounded_distribution,
)

__all__ = [
    "AtomPdf",
    "GridPdf",
    "GridSpec",
    "LatticeMixture",
    "MomentSummary",
    "WalkReport",
    "bounded_walk",
    "calibrate",
    "chernoff_bound",
    "convolve",
    "gambler_ruin_bound",
    "homogeneous_exit_accuracy",
    "homogeneous_expected_steps",
    "homogeneous_uniform_accuracy",
    "lattice_mixture",
    "moments",
    "population_vote_density",
    "rho_root",
    "unbounded_accuracy",
    "unbounded_distribution",
    "vote_density",
    "weight_density",
]
