"""Spectral propagation, distance trajectories and crossover detection.

States are evolved as ``rho(t) = sum_s exp(t lambda_s) c_s R_s`` with
``c_s = Tr(L_s^dag rho(0))``.  Coefficients are computed once per initial
state, so a trajectory costs one ``d x d`` synthesis per time point.  All
distances are evaluated in the energy frame, where the Gibbs reference is
diagonal and its log-weights are known exactly.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .davies import DaviesModel, LiouvillianSpectrum
from .distances import DistanceMeasure, SpectralState, check_density_matrix, distance_function
from .errors import NonConvergedSpectrum

BIORTHONORMALITY_LIMIT = 1e-8
DEFAULT_POINTS = 600
DEFAULT_SPAN = (1e-3, 20.0)
ZERO_DIFF = 1e-12
PLAIN = "plain"
DRESSED = "dressed"


def _check_spectrum(spectrum: LiouvillianSpectrum):
    res = spectrum.biorthonormality_residual()
    if res > BIORTHONORMALITY_LIMIT:
        raise NonConvergedSpectrum(f"biorthonormality residual {res:.2e} exceeds {BIORTHONORMALITY_LIMIT:.0e}")


@dataclass(frozen=True)
class Propagator:
    """Precomputed expansion of one initial state."""

    spectrum: LiouvillianSpectrum
    coefficients: np.ndarray

    @classmethod
    def from_state(cls, spectrum: LiouvillianSpectrum, rho0) -> "Propagator":
        _check_spectrum(spectrum)
        rho0 = check_density_matrix(rho0, tol=1e-10, name="initial state")
        return cls(spectrum, spectrum.coefficients(rho0))

    def energy_frame(self, t: float) -> np.ndarray:
        return self.spectrum.synthesize_energy_frame(self.coefficients, t)

    def __call__(self, t: float) -> np.ndarray:
        return self.spectrum.from_energy_frame(self.energy_frame(t))


def evolve(spectrum: LiouvillianSpectrum, rho0, t: float) -> np.ndarray:
    """State at time ``t >= 0`` evolved from ``rho0``."""
    if t < 0:
        raise ValueError("evolution time must be non-negative")
    return Propagator.from_state(spectrum, rho0)(t)


def gibbs_reference(model: DaviesModel) -> SpectralState:
    """Gibbs state in the energy frame, with exact log-weights."""
    return SpectralState.gibbs(model.energies, np.eye(model.dim), model.beta)


def steady_reference(spectrum: LiouvillianSpectrum) -> SpectralState:
    """Energy-frame steady state taken from the spectrum itself."""
    R1 = spectrum.to_energy_frame(spectrum.steady_state)
    w = np.clip(np.real(np.diag(R1)), np.finfo(float).tiny, None)
    return SpectralState.from_log_weights(np.log(w), np.eye(spectrum.dim))


def slowest_rate(spectrum: LiouvillianSpectrum, tol: float = 1e-10) -> float:
    rates = np.abs(spectrum.eigenvalues.real)
    nonzero = rates[rates > tol]
    if nonzero.size == 0:
        raise ValueError("spectrum has no decaying mode")
    return float(nonzero.min())


def default_grid(spectrum: LiouvillianSpectrum, points: int = DEFAULT_POINTS, span=DEFAULT_SPAN) -> np.ndarray:
    """``0`` followed by a geometric grid over ``span`` in units of ``1/|Re lambda_2|``."""
    rate = slowest_rate(spectrum)
    return np.concatenate([[0.0], np.geomspace(span[0] / rate, span[1] / rate, points - 1)])


def make_grid(start: float, stop: float, points: int, spacing: str = "linear") -> np.ndarray:
    """Grid starting at ``0``; for geometric spacing ``start`` is the first positive point."""
    if points < 1:
        raise ValueError("grid needs at least one point")
    if spacing == "linear":
        return np.linspace(start, stop, points)
    if spacing == "geometric":
        if points == 1:
            return np.zeros(1)
        return np.concatenate([[0.0], np.geomspace(start, stop, points - 1)])
    raise ValueError(f"unknown grid spacing {spacing!r}")


def fingerprint(spectrum: LiouvillianSpectrum) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(spectrum.energies).tobytes())
    h.update(np.ascontiguousarray(spectrum.eigenvalues).tobytes())
    return h.hexdigest()[:16]


@dataclass
class Trajectory:
    """Distance-to-equilibrium series for a plain and a dressed initial state.

    ``series[(measure, "plain" | "dressed")]`` holds one value per grid point.
    ``evaluator(measure, which, t)`` recomputes a single value exactly and is
    what crossover refinement uses.
    """

    times: np.ndarray
    series: dict
    fingerprint: str = ""
    evaluator: Callable | None = field(default=None, repr=False)

    @property
    def measures(self) -> list[DistanceMeasure]:
        return sorted({m for m, _ in self.series}, key=lambda m: list(DistanceMeasure).index(m))

    def get(self, measure, which: str) -> np.ndarray:
        return self.series[(DistanceMeasure.parse(measure), which)]

    def value(self, measure, which: str, t: float) -> float:
        if self.evaluator is None:
            raise ValueError("trajectory has no exact evaluator")
        return self.evaluator(DistanceMeasure.parse(measure), which, t)

    @classmethod
    def from_functions(cls, times, functions: dict) -> "Trajectory":
        """Build from ``{measure: (plain_fn, dressed_fn)}`` scalar functions of time."""
        times = np.asarray(times, dtype=float)
        funcs = {DistanceMeasure.parse(m): pair for m, pair in functions.items()}
        series = {}
        for m, (fp, fd) in funcs.items():
            series[(m, PLAIN)] = np.array([fp(t) for t in times])
            series[(m, DRESSED)] = np.array([fd(t) for t in times])

        def evaluator(m, which, t):
            return funcs[m][0 if which == PLAIN else 1](t)

        return cls(times, series, "synthetic", evaluator)


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-d array")
    if grid[0] != 0.0:
        raise ValueError("grid must start at t = 0")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    return grid


def relaxation_trajectory(
    spectrum: LiouvillianSpectrum,
    rho_plain,
    rho_dressed,
    grid,
    measures=tuple(DistanceMeasure),
    model: DaviesModel | None = None,
) -> Trajectory:
    """Distances of both evolved states to the steady state at every grid point.

    With ``model`` given, the reference is the exact Gibbs state; otherwise it
    is the steady state stored in ``spectrum``.
    """
    grid = _check_grid(grid)
    measures = [DistanceMeasure.parse(m) for m in measures]
    reference = gibbs_reference(model) if model is not None else steady_reference(spectrum)
    props = {PLAIN: Propagator.from_state(spectrum, rho_plain), DRESSED: Propagator.from_state(spectrum, rho_dressed)}

    def distances_at(which, t, ms):
        X = props[which].energy_frame(t)
        X = 0.5 * (X + X.conj().T)
        return [distance_function(m)(X, reference) for m in ms]

    series = {(m, w): np.empty(grid.size) for m in measures for w in props}
    for i, t in enumerate(grid):
        for w in props:
            for m, v in zip(measures, distances_at(w, t, measures)):
                series[(m, w)][i] = v

    def evaluator(m, which, t):
        return distances_at(which, t, [m])[0]

    return Trajectory(grid, series, fingerprint(spectrum), evaluator)


@dataclass(frozen=True)
class CrossoverReport:
    measure: DistanceMeasure
    t_qme: float | None
    bracket: tuple | None = None
    residual: float | None = None
    sign_changes: int = 0

    @property
    def found(self) -> bool:
        return self.t_qme is not None


def _signs(diff: np.ndarray) -> np.ndarray:
    s = np.sign(diff)
    s[np.abs(diff) <= ZERO_DIFF] = 0
    return s


def detect_crossover(traj: Trajectory, measure, xtol: float = 1e-13) -> CrossoverReport:
    """Last time after which the dressed curve stays below the plain one.

    Sign changes of ``dressed - plain`` are located on the grid (differences
    within ``1e-12`` of zero count as no sign), the last one is refined with
    Brent's method on the exact evaluator when available, otherwise by linear
    interpolation.  Absent when there is no sign change or the dressed curve
    is not below the plain one after it.
    """
    measure = DistanceMeasure.parse(measure)
    diff = traj.get(measure, DRESSED) - traj.get(measure, PLAIN)
    s = _signs(diff)
    nz = np.flatnonzero(s)
    changes = [(int(a), int(b)) for a, b in zip(nz[:-1], nz[1:]) if s[a] != s[b]]
    if not changes:
        return CrossoverReport(measure, None)
    i, j = changes[-1]
    if s[j] > 0:
        return CrossoverReport(measure, None, (i, j), None, len(changes))
    t0, t1 = float(traj.times[i]), float(traj.times[j])
    if traj.evaluator is None:
        t = t0 + (t1 - t0) * diff[i] / (diff[i] - diff[j])
        return CrossoverReport(measure, float(t), (i, j), None, len(changes))

    def f(t):
        return traj.evaluator(measure, DRESSED, t) - traj.evaluator(measure, PLAIN, t)

    t = brentq(f, t0, t1, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
    return CrossoverReport(measure, float(t), (i, j), float(abs(f(t))), len(changes))


def fit_decay_rate(times, values) -> float:
    """Exponential decay rate from a least-squares fit of ``ln(values)`` against time."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = values > 0
    slope, _ = np.polyfit(times[keep], np.log(values[keep]), 1)
    return float(-slope)
