"""Random walks of a task's log-odds.

Under uncertainty sampling a task keeps receiving labels until ``|z|``
reaches a common threshold ``z_B``: a walk absorbed at ``+-z_B``. Under
uniform allocation it receives a fixed number ``r_u`` of labels: an
unbounded walk of ``r_u`` steps. Both are computed by repeated convolution
with the vote density.

Absorption for grid densities is applied per cell: a grid point at ``z``
covers ``[z - h/2, z + h/2]`` and the part of that cell at or beyond the
threshold exits. This keeps the expected step count continuous in ``z_B``,
which calibration relies on. Atom lattices use the exact rule ``|z| >= z_B``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft, optimize

from ..errors import ConvergenceError
from .closed_form import homogeneous_expected_steps
from .density import AtomPdf, Density, convolve

# relative slack when comparing a lattice point against the threshold
LATTICE_RTOL = 1e-9


@dataclass(frozen=True)
class WalkReport:
    expected_steps: float
    exit_accuracy: float
    residual_mass: float
    converged: bool
    steps: int
    exit_error: float = 0.0


def _inner_fraction(f: Density, z_b: float, n: np.ndarray) -> np.ndarray:
    """Fraction of the mass at lattice index ``n`` that stays strictly inside."""
    if isinstance(f, AtomPdf):
        if f.step == 0.0:
            return np.ones(len(n))
        return (np.abs(n) < z_b / f.step * (1.0 - LATTICE_RTOL)).astype(float)
    return np.clip(z_b / f.h - np.abs(n) + 0.5, 0.0, 1.0)


def _inner_half_width(f: Density, z_b: float) -> int:
    if isinstance(f, AtomPdf):
        if f.step == 0.0:
            return 0
        return max(math.ceil(z_b / f.step * (1.0 - LATTICE_RTOL)) - 1, 0)
    return max(math.ceil(z_b / f.h + 0.5) - 1, 0)


class _Convolver:
    """Convolves a fixed-length state with a fixed kernel, reusing the
    kernel transform across steps."""

    def __init__(self, kernel: np.ndarray, state_len: int, method: str):
        self.kernel = kernel
        self.method = method
        self.out_len = state_len + len(kernel) - 1
        if method == "fft":
            self.size = fft.next_fast_len(self.out_len, real=True)
            self.kernel_hat = fft.rfft(kernel, self.size)
        elif method != "direct":
            raise ValueError(f"unknown convolution method {method!r}")

    def __call__(self, state: np.ndarray) -> np.ndarray:
        if self.method == "direct":
            return np.convolve(state, self.kernel)
        out = fft.irfft(fft.rfft(state, self.size) * self.kernel_hat, self.size)[: self.out_len]
        return np.maximum(out, 0.0)


def bounded_walk(
    f_v: Density,
    z_b: float,
    tol: float = 1e-6,
    max_k: int = 100_000,
    method: str = "fft",
) -> WalkReport:
    """Expected number of labels until ``|z| >= z_b`` and the probability of
    leaving through the upper (correct) side.

    The sum over steps stops once the surviving mass drops below ``tol``;
    the remaining mass is charged ``k + 2 z_b / mean`` further steps.
    """
    if not z_b > 0:
        raise ValueError("threshold must be positive")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    kernel = f_v.masses / f_v.masses.sum()
    half_k = len(kernel) // 2
    a = _inner_half_width(f_v, z_b)
    n_out = np.arange(-(a + half_k), a + half_k + 1)
    inner = _inner_fraction(f_v, z_b, n_out)
    positive = n_out > 0
    negative = n_out < 0
    zero = n_out == 0
    conv = _Convolver(kernel, 2 * a + 1, method)
    keep = slice(half_k, half_k + 2 * a + 1)

    # first step: the walk starts at 0, so the distribution is f_V itself
    dist = np.zeros(len(n_out))
    dist[a : a + len(kernel)] = kernel
    expected = 0.0
    accuracy = 0.0
    error = 0.0
    surviving = 1.0
    k = 0
    while k < max_k:
        k += 1
        leaving = dist * (1.0 - inner)
        up = float(leaving[positive].sum())
        down = float(leaving[negative].sum())
        tie = float(leaving[zero].sum())
        exited = up + down + tie
        accuracy += up + 0.5 * tie
        error += down + 0.5 * tie
        expected += k * exited
        state = (dist * inner)[keep]
        surviving = float(state.sum())
        if surviving < tol:
            break
        dist = conv(state)
    converged = surviving < tol
    mean = float(np.dot(kernel, f_v.positions))
    if surviving > 0 and mean != 0:
        expected += surviving * (k + 2.0 * z_b / abs(mean))
    return WalkReport(expected, accuracy, surviving, converged, k, error)


def unbounded_distribution(f_v: Density, r_u: int, method: str = "fft") -> np.ndarray:
    """Masses of the ``r_u``-fold self-convolution on indices ``-r_u K..r_u K``."""
    if r_u < 1 or int(r_u) != r_u:
        raise ValueError("number of steps must be a positive integer")
    r_u = int(r_u)
    kernel = f_v.masses / f_v.masses.sum()
    if r_u == 1:
        return kernel.copy()
    if method == "fft":
        out_len = r_u * (len(kernel) - 1) + 1
        size = fft.next_fast_len(out_len, real=True)
        out = fft.irfft(fft.rfft(kernel, size) ** r_u, size)[:out_len]
        return np.maximum(out, 0.0)
    out = kernel
    for _ in range(r_u - 1):
        out = convolve(out, kernel, "direct")
    return out


def unbounded_accuracy(f_v: Density, r_u: int, method: str | None = None) -> float:
    """Probability that ``r_u`` votes sum to a positive log-odds; an exact
    zero counts one half."""
    if method is None:
        method = "direct" if isinstance(f_v, AtomPdf) else "fft"
    dist = unbounded_distribution(f_v, r_u, method)
    mid = len(dist) // 2
    return float(dist[mid + 1 :].sum() + 0.5 * dist[mid])


def _two_atom_skill(f_v: AtomPdf) -> float:
    masses = f_v.mass_array
    k = f_v.half_points
    support = np.flatnonzero(masses > 0) - k
    if f_v.step == 0.0 or set(support.tolist()) - {-1, 1}:
        raise ValueError("closed-form calibration needs a two-atom vote density")
    return f_v.atom(1) / (f_v.atom(1) + f_v.atom(-1))


def calibrate(
    f_v: Density,
    r_u: float,
    rtol: float = 1e-3,
    tol: float = 1e-6,
    max_k: int = 100_000,
    z_max: float | None = None,
) -> float:
    """Threshold ``z_B`` at which the bounded walk uses ``r_u`` labels on average.

    For a two-atom density ``r_u = 1`` returns half the atom magnitude (any
    threshold below it exits in one step) and larger budgets invert the
    homogeneous closed form, which is continuous in ``z_B``. Grid densities
    are inverted through ``bounded_walk`` by bracketed root finding, with
    the bracket doubled past the grid edge when needed.
    """
    if not r_u >= 1:
        raise ConvergenceError(f"budget {r_u} is below the one-label minimum", bracket=(0.0, 0.0))
    if isinstance(f_v, AtomPdf):
        if f_v.step == 0.0:
            raise ConvergenceError("weightless votes never reach a threshold", bracket=(0.0, math.inf))
        if r_u == 1:
            return f_v.step / 2
        p = _two_atom_skill(f_v)

        def excess(z):
            return homogeneous_expected_steps(p, z) - r_u

        hi = f_v.step
        while excess(hi) < 0:
            hi *= 2
            if hi > 1e6:
                raise ConvergenceError(f"budget {r_u} unattainable", bracket=(0.0, hi))
        return optimize.brentq(excess, 1e-12, hi, xtol=1e-12, rtol=1e-12)

    def expected(z):
        report = bounded_walk(f_v, z, tol=tol, max_k=max_k)
        if not report.converged:
            raise ConvergenceError(f"bounded walk did not converge at z_B={z}", bracket=(0.0, z))
        return report.expected_steps

    lo = 1e-9
    e_lo = expected(lo)
    if e_lo >= r_u * (1.0 - rtol):
        if abs(e_lo - r_u) <= rtol * r_u:
            return lo
        raise ConvergenceError(f"budget {r_u} is below the minimum {e_lo:.6g}", bracket=(lo, lo))
    hi = f_v.hi if z_max is None else z_max
    limit = 8 * max(f_v.hi, hi)
    while expected(hi) < r_u:
        lo, hi = hi, 2 * hi
        if hi > limit:
            raise ConvergenceError(f"budget {r_u} unattainable below z_B={limit}", bracket=(lo, hi))
    z = optimize.brentq(lambda z: expected(z) - r_u, lo, hi, xtol=1e-9 * hi)
    if abs(expected(z) - r_u) > rtol * r_u:
        raise ConvergenceError(f"calibration missed budget {r_u}", bracket=(lo, hi))
    return z


@dataclass(frozen=True)
class LatticeMixture:
    """Randomised choice between two lattice thresholds with average cost
    ``r_u``: level ``upper`` with probability ``weight``, else ``lower``."""

    lower: int
    upper: int
    weight: float
    expected_steps: float
    exit_accuracy: float


def lattice_mixture(f_v: AtomPdf, r_u: float) -> LatticeMixture:
    """Exact cost-matched accuracy of a homogeneous crowd under a threshold
    that alternates between two adjacent lattice levels."""
    _two_atom_skill(f_v)
    w = f_v.step
    if not r_u >= 1:
        raise ValueError("budget must be at least one label")

    def level(a):
        rep = bounded_walk(f_v, a * w, tol=1e-15)
        return rep.expected_steps, rep.exit_accuracy

    a = 1
    e_lo, acc_lo = level(1)
    if r_u <= e_lo:
        return LatticeMixture(1, 1, 0.0, e_lo, acc_lo)
    while True:
        e_hi, acc_hi = level(a + 1)
        if e_hi >= r_u:
            break
        a += 1
        e_lo, acc_lo = e_hi, acc_hi
    lam = (r_u - e_lo) / (e_hi - e_lo)
    return LatticeMixture(a, a + 1, lam, r_u, (1 - lam) * acc_lo + lam * acc_hi)
