"""Permutation dressing of initial states.

A probe ``rho = Lam @ D @ Lam^dag`` is mapped to ``U rho U^dag`` with
``U = U1 @ P @ Lam^dag``, which places the (permuted) probe eigenvalues on the
diagonal of the energy eigenbasis.  The result has no energy coherences, so
every coherence-sector mode of a Davies generator drops out of its evolution.
The permutation is chosen to push the state as far from equilibrium as
possible: large probe eigenvalues go to levels with small Gibbs weight.

Also here: the classifier for probes that are coherent in the energy basis,
and the rotation protocol for generators whose slowest left eigenmatrix is
Hermitian.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import linops
from .davies import COHERENCE, DaviesModel, LiouvillianSpectrum
from .distances import check_density_matrix
from .errors import (
    InvalidState,
    NonHermitianL2,
    NonPureProbe,
    RealSlowestMode,
    SameSignEigenvalues,
)
from .linops import HermitianSpectrum

SUPPRESSION_THRESHOLD = 1e-10
COHERENCE_TOL = 1e-12


@dataclass(frozen=True)
class PermutationSpec:
    """Permutation of ``dim`` slots.

    ``pi[l]`` is the (0-based) index of the entry moved into slot ``l``, so
    ``P @ diag(x) @ P^T == diag(x[pi])`` and ``P[l, pi[l]] == 1``.
    """

    pi: tuple

    def __post_init__(self):
        pi = tuple(int(p) for p in self.pi)
        if sorted(pi) != list(range(len(pi))):
            raise ValueError(f"{pi} is not a permutation of 0..{len(pi) - 1}")
        object.__setattr__(self, "pi", pi)

    @classmethod
    def identity(cls, dim: int) -> "PermutationSpec":
        return cls(tuple(range(dim)))

    @classmethod
    def from_one_based(cls, pi) -> "PermutationSpec":
        return cls(tuple(int(p) - 1 for p in pi))

    @classmethod
    def transposition(cls, dim: int, a: int, b: int) -> "PermutationSpec":
        pi = list(range(dim))
        pi[a], pi[b] = pi[b], pi[a]
        return cls(tuple(pi))

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator) -> "PermutationSpec":
        return cls(tuple(rng.permutation(dim)))

    @property
    def dim(self) -> int:
        return len(self.pi)

    @property
    def one_based(self) -> tuple:
        return tuple(p + 1 for p in self.pi)

    def as_matrix(self) -> np.ndarray:
        P = np.zeros((self.dim, self.dim))
        P[np.arange(self.dim), self.pi] = 1.0
        return P

    def permute(self, values) -> np.ndarray:
        """Diagonal of ``P diag(values) P^T``."""
        return np.asarray(values)[list(self.pi)]

    def inverse(self) -> "PermutationSpec":
        inv = np.empty(self.dim, dtype=int)
        inv[list(self.pi)] = np.arange(self.dim)
        return PermutationSpec(tuple(inv))

    def is_involution(self) -> bool:
        return all(self.pi[p] == l for l, p in enumerate(self.pi))


def canonical_permutation(state_eigs, gibbs_weights) -> PermutationSpec:
    """Pair state eigenvalues against Gibbs weights in opposite order.

    The largest state eigenvalue lands on the slot with the smallest Gibbs
    weight.  Ties keep their input order (stable sorts).
    """
    state_eigs = np.asarray(state_eigs, dtype=float)
    gibbs_weights = np.asarray(gibbs_weights, dtype=float)
    if state_eigs.shape != gibbs_weights.shape or state_eigs.ndim != 1:
        raise ValueError("state eigenvalues and Gibbs weights must be 1-d arrays of equal length")
    slots = np.argsort(gibbs_weights, kind="stable")
    donors = np.argsort(-state_eigs, kind="stable")
    pi = np.empty(len(slots), dtype=int)
    pi[slots] = donors
    return PermutationSpec(tuple(pi))


@dataclass(frozen=True)
class DressingPlan:
    """Everything needed to reproduce a dressed state.

    ``state_spectrum`` holds ``Lam`` (basis) and ``D`` (values) of the probe;
    ``populations`` is the diagonal of ``P D P^T``, i.e. the dressed state's
    weights on the energy levels.
    """

    state_spectrum: HermitianSpectrum
    permutation: PermutationSpec
    dressing_unitary: np.ndarray
    dressed_state: np.ndarray
    populations: np.ndarray


def dress_state(probe, model: DaviesModel, permutation: PermutationSpec | None = None, order: str = "ascending") -> DressingPlan:
    """Dress ``probe`` with ``U = U1 P Lam^dag``.

    ``order`` fixes the eigenvalue order of ``Lam``; fixed permutations such as
    the bit-flip permutation depend on it.  Without a permutation the
    canonical anti-Gibbs pairing is used.
    """
    probe = check_density_matrix(probe, tol=1e-10, name="probe")
    if probe.shape[0] != model.dim:
        raise InvalidState(f"probe dimension {probe.shape[0]} does not match model dimension {model.dim}")
    spec = linops.hermitian_eigendecompose(0.5 * (probe + probe.conj().T), order=order)
    if permutation is None:
        permutation = canonical_permutation(spec.values, model.gibbs_weights())
    if permutation.dim != model.dim:
        raise ValueError("permutation dimension does not match the model")
    U1 = model.basis
    U = U1 @ permutation.as_matrix() @ spec.basis.conj().T
    populations = permutation.permute(spec.values)
    dressed = (U1 * populations) @ U1.conj().T
    return DressingPlan(spec, permutation, U, dressed, populations)


def mode_overlap(L_s, rho) -> complex:
    """``Tr(L_s^dag rho)``."""
    return complex(np.vdot(np.asarray(L_s), np.asarray(rho)))


@dataclass(frozen=True)
class ModeOverlap:
    mode: int  # 1-based
    eigenvalue: complex
    sector: str
    abs_overlap: float
    suppressed: bool


def suppression_report(spectrum: LiouvillianSpectrum, rho, threshold: float = SUPPRESSION_THRESHOLD) -> list[ModeOverlap]:
    """Overlap ``|Tr(L_s^dag rho)|`` of ``rho`` with every left eigenmatrix."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    c = np.abs(spectrum.coefficients(rho))
    return [
        ModeOverlap(k + 1, complex(spectrum.eigenvalues[k]), str(spectrum.sectors[k]), float(c[k]), bool(c[k] <= threshold))
        for k in range(len(spectrum))
    ]


def slowest_unsuppressed(report: list[ModeOverlap]) -> ModeOverlap | None:
    """First mode after the steady state that still carries weight."""
    for rec in report[1:]:
        if not rec.suppressed:
            return rec
    return None


class CoherenceTag(enum.Enum):
    INCOHERENT = "incoherent"
    COHERENT_BLOCKING = "coherent_blocking"
    COHERENT_TRANSPARENT = "coherent_transparent"


@dataclass(frozen=True)
class CoherenceScenario:
    tag: CoherenceTag
    overlap_value: complex


def classify_support(rho, basis, k0: int, l0: int, tol: float = COHERENCE_TOL) -> CoherenceScenario:
    """Classify ``rho`` against the coherence mode ``L2' = |k0><l0|`` (0-based).

    The overlap reported is ``<psi_l0| rho |psi_k0>``.
    """
    if k0 == l0:
        raise ValueError("a coherence mode needs k0 != l0")
    R = np.asarray(basis).conj().T @ np.asarray(rho) @ np.asarray(basis)
    overlap = complex(R[l0, k0])
    off = R - np.diag(np.diag(R))
    if np.max(np.abs(off), initial=0.0) <= tol:
        tag = CoherenceTag.INCOHERENT
    elif abs(overlap) <= tol:
        tag = CoherenceTag.COHERENT_TRANSPARENT
    else:
        tag = CoherenceTag.COHERENT_BLOCKING
    return CoherenceScenario(tag, overlap)


def classify_coherence(rho, spectrum: LiouvillianSpectrum, model: DaviesModel | None = None) -> CoherenceScenario:
    """Classify ``rho`` by its overlap with the slowest decaying mode."""
    k = spectrum.slowest_mode
    if spectrum.sectors[k] != COHERENCE:
        raise RealSlowestMode("slowest decaying mode is population-sector; use the rotation protocol")
    basis = spectrum.basis if model is None else model.basis
    k0, l0 = spectrum.support[k]
    return classify_support(rho, basis, int(k0), int(l0))


def critical_angle(alpha_1: float, alpha_n: float) -> float:
    """Angle at which ``alpha_1 cos^2 + alpha_n sin^2`` vanishes."""
    if not alpha_1 * alpha_n < 0:
        raise SameSignEigenvalues(f"need opposite signs, got {alpha_1} and {alpha_n}")
    return float(np.arctan(np.sqrt(abs(alpha_1 / alpha_n))))


def pure_probe_support(probe, tol: float = 1e-10) -> tuple[np.ndarray, int]:
    """Eigenbasis ``Lam`` (ascending) of a pure probe and the index of its unit eigenvalue."""
    probe = check_density_matrix(probe, tol=tol, name="probe")
    spec = linops.hermitian_eigendecompose(0.5 * (probe + probe.conj().T), order="ascending")
    target = np.zeros(spec.dim)
    target[-1] = 1.0
    if np.max(np.abs(spec.values - target)) > 1e-8:
        raise NonPureProbe("probe is not a pure state")
    return spec.basis, spec.dim - 1


def rotation_permutations(dim: int, support: int, first: int, second: int) -> tuple[PermutationSpec, PermutationSpec]:
    """Permutations selecting ``alpha[first]`` at angle 0 and ``alpha[second]`` at pi/2.

    ``P`` is the transposition taking the probe's support slot to ``first``;
    ``S`` swaps the support slot with the image of ``second`` under ``P``.
    """
    if first == second:
        raise ValueError("the two selected eigenvalues must differ")
    P = PermutationSpec.transposition(dim, first, support)
    S = PermutationSpec.transposition(dim, support, P.pi[second])
    return P, S


def rotation_unitary(theta: float, P_pi: PermutationSpec, S_pi: PermutationSpec) -> np.ndarray:
    """``V(theta) = P exp(i theta S)``."""
    S = S_pi.as_matrix()
    if not np.array_equal(S, S.T):
        raise ValueError("S must be a symmetric permutation")
    return P_pi.as_matrix() @ sla.expm(1j * theta * S)


@dataclass(frozen=True)
class RotationTerms:
    """The three contributions to ``Tr(L2 rho')`` for the rotation protocol."""

    first: complex
    second: complex
    commutator: complex

    def total(self, theta: float) -> complex:
        return np.cos(theta) ** 2 * self.first + np.sin(theta) ** 2 * self.second + 0.5j * np.sin(2 * theta) * self.commutator


def rotation_terms(L2_prime, D, P_pi: PermutationSpec, S_pi: PermutationSpec) -> RotationTerms:
    """Evaluate the three traces of the rotation-protocol overlap expansion."""
    L2_prime = np.asarray(L2_prime)
    D = np.asarray(D)
    P = P_pi.as_matrix()
    S = S_pi.as_matrix()
    T = P.T @ L2_prime @ P
    return RotationTerms(
        first=complex(np.trace(L2_prime @ P @ D @ P.T)),
        second=complex(np.trace(T @ S @ D @ S.T)),
        commutator=complex(np.trace(S @ (D @ T - T @ D))),
    )


def real_mode_dressing(probe, H_basis, L2, theta: float, P_pi: PermutationSpec, S_pi: PermutationSpec) -> tuple[np.ndarray, complex]:
    """Dress a pure probe with ``U = U1 V(theta) Lam^dag`` and return ``(rho', Tr(L2 rho'))``.

    ``H_basis`` is the unitary ``U1`` that diagonalizes the Hermitian ``L2``.
    """
    L2 = np.asarray(L2, dtype=complex)
    if not linops.is_hermitian(L2, tol=1e-10):
        raise NonHermitianL2("slowest left eigenmatrix must be Hermitian for the rotation protocol")
    Lam, _ = pure_probe_support(probe)
    U = np.asarray(H_basis) @ rotation_unitary(theta, P_pi, S_pi) @ Lam.conj().T
    dressed = U @ np.asarray(probe) @ U.conj().T
    return dressed, complex(np.trace(L2 @ dressed))
