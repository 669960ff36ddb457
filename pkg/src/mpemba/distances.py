"""Distinguishability measures between density matrices.

All three measures take ``(state, reference)``; only the relative entropy is
asymmetric.  Logarithms are natural.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import linops
from .errors import InvalidBloch, InvalidState, SupportViolation

STATE_TOL = 1e-8
SUPPORT_TOL = 1e-10

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class DistanceMeasure(enum.Enum):
    HSD = "hsd"
    QRE = "qre"
    TD = "td"

    @classmethod
    def parse(cls, value) -> "DistanceMeasure":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown distance measure {value!r}") from None


@dataclass(frozen=True)
class SpectralState:
    """Full-rank density matrix held as ``basis @ diag(exp(log_values)) @ basis^dag``.

    Keeping the log-weights exact matters for relative entropies against
    low-temperature Gibbs states, whose smallest weights sit far below what a
    dense eigensolver can resolve.
    """

    log_values: np.ndarray
    basis: np.ndarray

    @classmethod
    def from_log_weights(cls, log_weights, basis) -> "SpectralState":
        log_weights = np.asarray(log_weights, dtype=float)
        return cls(log_weights - logsumexp(log_weights), np.asarray(basis, dtype=complex))

    @classmethod
    def gibbs(cls, energies, basis, beta: float) -> "SpectralState":
        return cls.from_log_weights(-beta * np.asarray(energies, dtype=float), basis)

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_values)

    def matrix(self) -> np.ndarray:
        return (self.basis * self.values) @ self.basis.conj().T


def _reference_matrix(sigma):
    if isinstance(sigma, SpectralState):
        return sigma.matrix()
    return check_density_matrix(sigma, name="reference")


def check_density_matrix(rho, tol: float = STATE_TOL, name: str = "state") -> np.ndarray:
    """Return ``rho`` as a complex array after checking it is a density matrix."""
    try:
        rho = linops.as_operator(rho)
    except ValueError as exc:
        raise InvalidState(f"{name}: {exc}") from None
    if linops.hermiticity_error(rho) > tol:
        raise InvalidState(f"{name} is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise InvalidState(f"{name} has trace {tr:.12g}")
    low = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if low < -tol:
        raise InvalidState(f"{name} has negative eigenvalue {low:.3e}")
    return rho


def hsd(rho, sigma) -> float:
    """Hilbert-Schmidt distance ``sqrt(Tr[(rho - sigma)^2])``."""
    rho = check_density_matrix(rho)
    sigma = _reference_matrix(sigma)
    diff = rho - sigma
    # Tr(X^2) for Hermitian X is the squared Frobenius norm
    return float(np.sqrt(np.sum(np.abs(diff) ** 2)))


def trace_distance(rho, sigma) -> float:
    """Trace distance ``Tr|rho - sigma| / 2``."""
    rho = check_density_matrix(rho)
    sigma = _reference_matrix(sigma)
    diff = rho - sigma
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.trace(linops.matrix_abs(diff)).real)


def qre(rho, sigma, cutoff: float = linops.LOG_CUTOFF) -> float:
    """Quantum relative entropy ``Tr[rho ln rho] - Tr[rho ln sigma]``.

    Eigenvalues below ``cutoff`` follow the ``0 ln 0 = 0`` convention.  Weight
    of ``rho`` outside the support of ``sigma`` raises :class:`SupportViolation`.
    ``sigma`` may be a :class:`SpectralState`, in which case its log-weights
    are used as given.
    """
    rho = check_density_matrix(rho)
    p = np.clip(linops.hermitian_eigendecompose(0.5 * (rho + rho.conj().T)).values, 0.0, None)
    entropy_term = float(np.sum(p[p > cutoff] * np.log(p[p > cutoff])))

    if isinstance(sigma, SpectralState):
        basis, log_q = sigma.basis, sigma.log_values
        null = np.zeros(len(log_q), dtype=bool)
    else:
        sigma = check_density_matrix(sigma, name="reference")
        s = linops.hermitian_eigendecompose(0.5 * (sigma + sigma.conj().T))
        basis = s.basis
        null = s.values <= cutoff
        log_q = np.log(np.where(null, 1.0, s.values))

    # <s_k| rho |s_k>, the weight of rho on each eigenvector of sigma
    weights = np.real(np.einsum("ik,ij,jk->k", basis.conj(), rho, basis))
    if np.any(weights[null] > SUPPORT_TOL):
        raise SupportViolation("state has weight outside the support of the reference")
    cross_term = float(np.sum(weights[~null] * log_q[~null]))
    return max(entropy_term - cross_term, 0.0)


def bloch_vector(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError("Bloch vectors are defined for 2x2 operators only")
    return np.array([np.trace(rho @ s).real for s in PAULI])


def bloch_state(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return 0.5 * (np.eye(2) + sum(c * s for c, s in zip(u, PAULI)))


def qubit_qre_bloch(u, r_ss) -> float:
    """Relative entropy between qubit states with Bloch vectors ``u`` and ``r_ss``.

    Uses the closed form valid for any single-qubit state, switching to its
    analytic limit at ``|u| = 1`` where ``(1 - |u|) ln(1 - |u|)`` vanishes.
    """
    u = np.asarray(u, dtype=float)
    r_ss = np.asarray(r_ss, dtype=float)
    nu = float(np.linalg.norm(u))
    nr = float(np.linalg.norm(r_ss))
    if nu > 1 + 1e-12:
        raise InvalidBloch(f"|u| = {nu} exceeds 1")
    if not 0 < nr < 1:
        raise InvalidBloch(f"reference Bloch length {nr} must lie in (0, 1)")
    nu = min(nu, 1.0)
    projection = float(u @ r_ss) / nr
    cross = np.log(2.0 / np.sqrt(1 - nr**2)) - np.arctanh(nr) * projection
    if nu >= 1.0 - 1e-15:
        return float(cross)
    entropy = 0.5 * ((1 + nu) * np.log(1 + nu) + (1 - nu) * np.log(1 - nu)) - np.log(2.0)
    return float(entropy + cross)


_MEASURES = {
    DistanceMeasure.HSD: hsd,
    DistanceMeasure.QRE: qre,
    DistanceMeasure.TD: trace_distance,
}


def distance(measure, rho, sigma) -> float:
    return _MEASURES[DistanceMeasure.parse(measure)](rho, sigma)


def distance_function(measure):
    return _MEASURES[DistanceMeasure.parse(measure)]

