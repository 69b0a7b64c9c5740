"""Densities on the log-odds axis.

Two carriers share one lattice layout, points ``n * step`` for
``n = -K..K``:

``GridPdf``
    A continuous density sampled at grid points; each point stands for the
    cell ``[z - h/2, z + h/2]`` and carries mass ``h * value``.
``AtomPdf``
    Exact point masses on the lattice ``w * Z``. Used for homogeneous
    crowds, where every vote has the same weight and discretising onto a
    fine grid would smear the atoms.

Both expose ``positions`` and ``masses`` so the walk and bound code can
treat them alike.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import signal, stats
from scipy.special import betaln, expit, log_expit

from ..domain import Beta, Dirac, Empirical, SkillDistribution, logit

DEFAULT_HALF_WIDTH = 12.0
DEFAULT_STEP = 0.005
TRUNCATION_WARNING = 1e-3


@dataclass(frozen=True)
class GridSpec:
    half_width: float = DEFAULT_HALF_WIDTH
    step: float = DEFAULT_STEP

    @property
    def half_points(self) -> int:
        return int(round(self.half_width / self.step))

    def positions(self) -> np.ndarray:
        k = self.half_points
        return np.arange(-k, k + 1) * self.step


@dataclass
class GridPdf:
    h: float
    values: np.ndarray
    truncated_mass: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or len(self.values) % 2 != 1:
            raise ValueError("grid must have an odd number of points centred on 0")
        if not self.h > 0:
            raise ValueError("grid step must be positive")
        if np.any(self.values < 0):
            raise ValueError("density values must be non-negative")

    @property
    def half_points(self) -> int:
        return len(self.values) // 2

    @property
    def hi(self) -> float:
        return self.half_points * self.h

    @property
    def lo(self) -> float:
        return -self.hi

    @property
    def step(self) -> float:
        return self.h

    @property
    def positions(self) -> np.ndarray:
        k = self.half_points
        return np.arange(-k, k + 1) * self.h

    @property
    def masses(self) -> np.ndarray:
        return self.values * self.h

    def total_mass(self) -> float:
        return float(self.masses.sum()) + self.truncated_mass

    def value_at(self, z: float) -> float:
        return float(np.interp(z, self.positions, self.values))


@dataclass
class AtomPdf:
    """Point masses at ``n * step`` for ``n = -K..K``.

    ``step == 0`` is allowed for the degenerate case of weightless votes,
    in which case the single entry sits at 0.
    """

    step: float
    mass_array: np.ndarray
    truncated_mass: float = field(default=0.0)

    def __post_init__(self):
        self.mass_array = np.asarray(self.mass_array, dtype=float)
        if self.mass_array.ndim != 1 or len(self.mass_array) % 2 != 1:
            raise ValueError("atom lattice must have an odd number of points centred on 0")
        if self.step < 0:
            raise ValueError("lattice step must be non-negative")
        if np.any(self.mass_array < 0):
            raise ValueError("masses must be non-negative")

    @property
    def half_points(self) -> int:
        return len(self.mass_array) // 2

    @property
    def positions(self) -> np.ndarray:
        k = self.half_points
        return np.arange(-k, k + 1) * self.step

    @property
    def masses(self) -> np.ndarray:
        return self.mass_array

    def total_mass(self) -> float:
        return float(self.mass_array.sum()) + self.truncated_mass

    def atom(self, n: int) -> float:
        k = self.half_points
        return float(self.mass_array[n + k]) if -k <= n <= k else 0.0


Density = GridPdf | AtomPdf


def _beta_weight_values(pop: Beta, z: np.ndarray) -> np.ndarray:
    # change of variables p = s(z): f_W(z) = s(z)^a * s(-z)^b / B(a, b)
    logf = pop.alpha * log_expit(z) + pop.beta * log_expit(-z) - betaln(pop.alpha, pop.beta)
    return np.exp(logf)


def weight_density(pop: SkillDistribution, grid: GridSpec | None = None) -> Density:
    """Density of the vote weight ``log(p / (1 - p))`` under the population.

    Beta populations are evaluated on the grid and renormalised to the mass
    the grid actually covers; mass beyond the grid edges is recorded in
    ``truncated_mass`` and triggers a warning above 1e-3. Dirac populations
    return a single exact atom; empirical populations are deposited onto
    the grid by linear (two-neighbour) assignment.
    """
    grid = grid or GridSpec()
    if isinstance(pop, Dirac):
        w = logit(pop.p)
        if w == 0.0:
            return AtomPdf(0.0, np.array([1.0]))
        masses = np.zeros(3)
        masses[2 if w > 0 else 0] = 1.0
        return AtomPdf(abs(w), masses)

    z = grid.positions()
    h = grid.step
    edge = grid.half_points * h + h / 2
    if isinstance(pop, Beta):
        dist = stats.beta(pop.alpha, pop.beta)
        truncated = float(dist.cdf(expit(-edge)) + dist.sf(expit(edge)))
        values = _beta_weight_values(pop, z)
        covered = values.sum() * h
        values = values * ((1.0 - truncated) / covered)
    elif isinstance(pop, Empirical):
        values = np.zeros_like(z)
        truncated = 0.0
        k = grid.half_points
        for p, m in pop.points:
            u = logit(p) / h + k
            lo = math.floor(u)
            frac = u - lo
            if lo < 0 or lo + 1 > 2 * k:
                truncated += m
                continue
            values[lo] += m * (1.0 - frac) / h
            values[lo + 1] += m * frac / h
    else:
        raise TypeError(f"unsupported population {pop!r}")
    if truncated > TRUNCATION_WARNING:
        warnings.warn(f"grid too narrow: {truncated:.3g} of the weight mass lies outside it", stacklevel=2)
    return GridPdf(h, values, truncated)


def vote_density(f_w: Density) -> Density:
    """Density of the signed increment of a task's log-odds, given that the
    task's true label is +1: ``f_V(z) = s(z) * (f_W(z) + f_W(-z))``."""
    tilt = expit(f_w.positions)
    if isinstance(f_w, AtomPdf):
        if f_w.step == 0.0:
            return AtomPdf(0.0, f_w.mass_array.copy(), f_w.truncated_mass)
        m = f_w.mass_array
        return AtomPdf(f_w.step, tilt * (m + m[::-1]), f_w.truncated_mass)
    v = f_w.values
    return GridPdf(f_w.h, tilt * (v + v[::-1]), f_w.truncated_mass)


def population_vote_density(pop: SkillDistribution, grid: GridSpec | None = None) -> Density:
    return vote_density(weight_density(pop, grid))


def convolve(a: np.ndarray, b: np.ndarray, method: str = "fft") -> np.ndarray:
    """Linear convolution of two mass arrays sharing one lattice step."""
    if method == "direct":
        return np.convolve(a, b)
    if method == "fft":
        out = signal.fftconvolve(a, b)
        return np.maximum(out, 0.0)
    raise ValueError(f"unknown convolution method {method!r}")


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float
    support_bound: float

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("variance must be non-negative")
        if self.support_bound < abs(self.mean):
            raise ValueError("support bound must contain the mean")


def moments(f: Density, gamma_factor: float = 5.0, gamma: float | None = None) -> MomentSummary:
    """Mean and variance by quadrature over the carrier's masses.

    The support bound defaults to ``gamma_factor`` standard deviations.
    """
    m = f.masses
    total = m.sum()
    z = f.positions
    mean = float(np.dot(m, z) / total)
    var = float(np.dot(m, (z - mean) ** 2) / total)
    if gamma is None:
        gamma = gamma_factor * math.sqrt(var)
    return MomentSummary(mean, var, max(float(gamma), abs(mean)))
