"""Davies generators for a finite system weakly coupled to a thermal bath.

The generator is assembled from jump operators between energy eigenstates,

    L1_nm = sqrt(xi_nm)  |psi_n><psi_m|,      L2_nm = sqrt(chi_nm) |psi_m><psi_n|,

for every pair ``m < n`` of levels sorted by descending energy, with

    chi_nm = gamma / (exp((e_m - e_n) / k_B T) +/- 1),   xi_nm = gamma -/+ chi_nm

(upper signs Fermi-Dirac, lower signs Bose-Einstein).  In the energy frame the
vectorized generator splits into ``d (d - 1)`` decoupled coherence modes and a
``d x d`` real population block, which is what :func:`spectral_decomposition`
exploits.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import linops
from .errors import (
    DegenerateGap,
    DegenerateGapWarning,
    DegenerateLiouvillianEigenvalue,
    NonUniqueSteadyState,
    SingularBoseRate,
)
from .linops import HermitianSpectrum

GAP_TOL = 1e-9
EIGENVALUE_CLUSTER_TOL = 1e-9
KERNEL_TOL = 1e-10

POPULATION = "population"
COHERENCE = "coherence"

DEGENERACY_POLICIES = ("error", "skip_pair", "keep")


class BathStatistics(enum.Enum):
    BOSE = "bose"
    FERMI = "fermi"

    @classmethod
    def parse(cls, value) -> "BathStatistics":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown bath statistics {value!r}; expected 'bose' or 'fermi'") from None


@dataclass(frozen=True)
class DaviesModel:
    """Hamiltonian spectrum plus bath parameters.

    ``spectrum.values`` must be sorted in descending order; its basis is the
    energy eigenbasis ``U1`` (column ``l`` is ``|psi_l>``).

    ``degeneracy_policy`` decides what happens to pairs whose gap is within
    ``gap_tol``: ``"error"`` raises, ``"skip_pair"`` drops the pair with a
    warning, ``"keep"`` evaluates the rate anyway (finite for Fermi
    statistics, :class:`SingularBoseRate` for Bose).
    """

    spectrum: HermitianSpectrum
    gamma: float
    temperature: float
    k_B: float = 1.0
    statistics: BathStatistics = BathStatistics.BOSE
    degeneracy_policy: str = "skip_pair"
    gap_tol: float = GAP_TOL

    def __post_init__(self):
        object.__setattr__(self, "statistics", BathStatistics.parse(self.statistics))
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if self.temperature <= 0 or self.k_B <= 0:
            raise ValueError("temperature and k_B must be positive")
        if self.degeneracy_policy not in DEGENERACY_POLICIES:
            raise ValueError(f"unknown degeneracy policy {self.degeneracy_policy!r}")
        values = np.asarray(self.spectrum.values, dtype=float)
        if np.any(np.diff(values) > self.gap_tol):
            raise ValueError("Hamiltonian energies must be sorted in descending order")
        if not linops.is_unitary(self.spectrum.basis):
            raise ValueError("energy basis is not unitary")

    @classmethod
    def from_hamiltonian(cls, H, gamma: float, temperature: float, **kwargs) -> "DaviesModel":
        return cls(linops.hermitian_eigendecompose(H, order="descending"), gamma, temperature, **kwargs)

    @property
    def dim(self) -> int:
        return self.spectrum.dim

    @property
    def energies(self) -> np.ndarray:
        return np.asarray(self.spectrum.values, dtype=float)

    @property
    def basis(self) -> np.ndarray:
        return self.spectrum.basis

    @property
    def beta(self) -> float:
        return 1.0 / (self.k_B * self.temperature)

    def hamiltonian(self) -> np.ndarray:
        return self.spectrum.reconstruct()

    def gibbs_weights(self) -> np.ndarray:
        """Boltzmann weights in the order of ``energies`` (ascending for descending energies)."""
        e = self.energies
        w = np.exp(-(e - e.min()) * self.beta)
        return w / w.sum()


def pair_rates(model: DaviesModel, n: int, m: int) -> tuple[float, float]:
    """Return ``(xi_nm, chi_nm)`` for ``m < n`` (0-based, descending energies)."""
    x = (model.energies[m] - model.energies[n]) * model.beta
    g = model.gamma
    if model.statistics is BathStatistics.BOSE:
        if x <= 0:
            raise SingularBoseRate(f"Bose rate diverges for zero gap between levels {m} and {n}")
        with np.errstate(over="ignore"):
            chi = g / np.expm1(x)
        return g + chi, chi
    with np.errstate(over="ignore"):
        chi = g / (np.exp(x) + 1.0)
    return g - chi, chi


@dataclass(frozen=True)
class JumpPair:
    """Rates and jump operators for one pair of levels ``m < n``."""

    n: int
    m: int
    xi: float
    chi: float
    basis: np.ndarray = field(repr=False, compare=False)

    @property
    def L1(self) -> np.ndarray:
        return np.sqrt(self.xi) * np.outer(self.basis[:, self.n], self.basis[:, self.m].conj())

    @property
    def L2(self) -> np.ndarray:
        return np.sqrt(self.chi) * np.outer(self.basis[:, self.m], self.basis[:, self.n].conj())


def _included_pairs(model: DaviesModel):
    e = model.energies
    d = model.dim
    skipped = []
    for m in range(d):
        for n in range(m + 1, d):
            if abs(e[m] - e[n]) <= model.gap_tol:
                if model.degeneracy_policy == "error":
                    raise DegenerateGap(f"levels {m} and {n} are degenerate (gap {abs(e[m] - e[n]):.2e})")
                if model.degeneracy_policy == "skip_pair":
                    skipped.append((m, n))
                    continue
            yield n, m
    if skipped:
        warnings.warn(
            f"skipped {len(skipped)} degenerate jump pair(s), first {skipped[0]}",
            DegenerateGapWarning,
            stacklevel=3,
        )


def build_jump_operators(model: DaviesModel) -> list[JumpPair]:
    pairs = []
    for n, m in _included_pairs(model):
        xi, chi = pair_rates(model, n, m)
        pairs.append(JumpPair(n, m, xi, chi, model.basis))
    return pairs


def transition_rates(model: DaviesModel) -> np.ndarray:
    """``W[a, b]`` is the rate of the jump ``b -> a`` between energy levels."""
    d = model.dim
    W = np.zeros((d, d))
    for n, m in _included_pairs(model):
        xi, chi = pair_rates(model, n, m)
        W[n, m] += xi
        W[m, n] += chi
    return W


def population_block(model: DaviesModel) -> np.ndarray:
    """Real ``d x d`` generator of the energy-level populations; columns sum to zero."""
    W = transition_rates(model)
    return W - np.diag(W.sum(axis=0))


def _decay_rates(W: np.ndarray) -> np.ndarray:
    # total escape rate out of each level
    return W.sum(axis=0)


def build_xi(model: DaviesModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Energy-frame vectorized generator ``Xi = A^dag (x) I + I (x) A + B``.

    Returns ``(A, B, Xi)`` as dense arrays (``B`` and ``Xi`` are ``d^2 x d^2``).
    """
    d = model.dim
    W = transition_rates(model)
    A = np.diag(-0.5 * _decay_rates(W) - 1j * model.energies)
    B = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            if W[a, b]:
                # |a,a><b,b| carries population from level b to level a
                B[a * d + a, b * d + b] += W[a, b]
    eye = np.eye(d)
    Xi = np.kron(A.conj().T, eye) + np.kron(eye, A) + B
    return A, B, Xi


def lindblad_superoperator(H, jumps) -> np.ndarray:
    """Dense column-stacked matrix of ``-i[H, .] + sum_k D[L_k]``."""
    H = np.asarray(H, dtype=complex)
    L = -1j * (linops.spre(H) - linops.spost(H))
    for J in jumps:
        J = np.asarray(J, dtype=complex)
        JdJ = J.conj().T @ J
        L += linops.sandwich(J, J.conj().T) - 0.5 * (linops.spre(JdJ) + linops.spost(JdJ))
    return L


def build_liouvillian_dense(model: DaviesModel) -> np.ndarray:
    """Full ``d^2 x d^2`` generator assembled directly from the jump operators."""
    jumps = []
    for pair in build_jump_operators(model):
        jumps.append(pair.L1)
        jumps.append(pair.L2)
    return lindblad_superoperator(model.hamiltonian(), jumps)


def apply_generator(model: DaviesModel, rho) -> np.ndarray:
    """Apply the generator to an operator as a map (no vectorization)."""
    H = model.hamiltonian()
    rho = np.asarray(rho, dtype=complex)
    out = -1j * (H @ rho - rho @ H)
    for pair in build_jump_operators(model):
        for J in (pair.L1, pair.L2):
            JdJ = J.conj().T @ J
            out += J @ rho @ J.conj().T - 0.5 * (JdJ @ rho + rho @ JdJ)
    return out


def steady_state_gibbs(model: DaviesModel) -> np.ndarray:
    U = model.basis
    return (U * model.gibbs_weights()) @ U.conj().T


@dataclass(frozen=True)
class LiouvillianSpectrum:
    """Biorthonormal eigen-decomposition of a Davies generator.

    Modes are stored in the energy frame: a coherence mode ``k`` has left and
    right eigenmatrices ``U1 |j><l| U1^dag`` with ``(j, l) = support[k]``; a
    population mode has diagonal eigenmatrices given by columns of
    ``pop_right`` / ``pop_left``.  Full eigenmatrices are built on demand by
    :meth:`right` and :meth:`left`.
    """

    eigenvalues: np.ndarray
    sectors: np.ndarray
    support: np.ndarray
    pop_column: np.ndarray
    pop_right: np.ndarray
    pop_left: np.ndarray
    basis: np.ndarray
    energies: np.ndarray
    degenerate_eigenvalues: bool = False

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def is_coherence(self, k: int) -> bool:
        return self.sectors[k] == COHERENCE

    @cached_property
    def coherence_mask(self) -> np.ndarray:
        return self.sectors == COHERENCE

    def _energy_frame(self, k: int, side: str) -> np.ndarray:
        d = self.dim
        if self.sectors[k] == COHERENCE:
            j, l = self.support[k]
            X = np.zeros((d, d), dtype=complex)
            X[j, l] = 1.0
            return X
        vecs = self.pop_right if side == "right" else self.pop_left
        return np.diag(vecs[:, self.pop_column[k]]).astype(complex)

    def right_energy(self, k: int) -> np.ndarray:
        return self._energy_frame(k, "right")

    def left_energy(self, k: int) -> np.ndarray:
        return self._energy_frame(k, "left")

    def right(self, k: int) -> np.ndarray:
        U = self.basis
        return U @ self._energy_frame(k, "right") @ U.conj().T

    def left(self, k: int) -> np.ndarray:
        U = self.basis
        return U @ self._energy_frame(k, "left") @ U.conj().T

    @property
    def steady_state(self) -> np.ndarray:
        return self.right(0)

    @property
    def slowest_mode(self) -> int:
        """Index of the slowest decaying (first nonzero) mode."""
        return 1

    def to_energy_frame(self, rho) -> np.ndarray:
        U = self.basis
        return U.conj().T @ np.asarray(rho) @ U

    def from_energy_frame(self, X) -> np.ndarray:
        U = self.basis
        return U @ X @ U.conj().T

    def coefficients(self, rho) -> np.ndarray:
        """Expansion coefficients ``c_s = Tr(L_s^dag rho)`` for every mode."""
        R = self.to_energy_frame(rho)
        c = np.empty(len(self), dtype=complex)
        coh = self.coherence_mask
        j, l = self.support[coh].T
        c[coh] = R[j, l]
        pop_coeffs = self.pop_left.conj().T @ np.diag(R)
        c[~coh] = pop_coeffs[self.pop_column[~coh]]
        return c

    def synthesize_energy_frame(self, coeffs, t: float = 0.0) -> np.ndarray:
        """``sum_s exp(t lambda_s) c_s R'_s`` in the energy frame."""
        d = self.dim
        weights = np.exp(t * self.eigenvalues) * np.asarray(coeffs)
        X = np.zeros((d, d), dtype=complex)
        coh = self.coherence_mask
        j, l = self.support[coh].T
        X[j, l] = weights[coh]
        pop = np.zeros(d, dtype=complex)
        pop[self.pop_column[~coh]] = weights[~coh]
        X[np.diag_indices(d)] = self.pop_right @ pop
        return X

    def synthesize(self, coeffs, t: float = 0.0) -> np.ndarray:
        return self.from_energy_frame(self.synthesize_energy_frame(coeffs, t))

    def biorthonormality_residual(self) -> float:
        """Largest deviation of ``Tr(L_j^dag R_l)`` from ``delta_jl``.

        Coherence modes are exactly orthonormal unit matrices and never overlap
        the diagonal population modes, so only the population block can deviate.
        """
        G = self.pop_left.conj().T @ self.pop_right
        return float(np.max(np.abs(G - np.eye(G.shape[0]))))

    def records(self) -> list[dict]:
        """One record per mode (1-based indices) for the spectrum dump."""
        out = []
        for k, lam in enumerate(self.eigenvalues):
            rec = {"index": k + 1, "re_lambda": float(lam.real), "im_lambda": float(lam.imag), "sector": self.sectors[k]}
            if self.sectors[k] == COHERENCE:
                rec["j0"], rec["l0"] = (int(x) + 1 for x in self.support[k])
            else:
                rec["j0"] = rec["l0"] = None
            out.append(rec)
        return out


def _clusters(values: np.ndarray, tol: float) -> list[list[int]]:
    order = np.argsort(values.real, kind="stable")
    groups: list[list[int]] = []
    for idx in order:
        if groups and all(abs(values[idx] - values[g]) <= tol for g in groups[-1][-1:]):
            groups[-1].append(int(idx))
        else:
            groups.append([int(idx)])
    return groups


def _population_eigensystem(P: np.ndarray):
    w, vl, vr = sla.eig(P, left=True, right=True)
    scale = max(1.0, float(np.max(np.abs(P))))
    if np.max(np.abs(w.imag)) <= 1e-10 * scale:
        w = w.real.astype(complex)
        vl, vr = vl.real.astype(complex), vr.real.astype(complex)
    for a in range(vr.shape[1]):
        v = vr[:, a]
        v = v / np.linalg.norm(v)
        pivot = v[np.argmax(np.abs(v))]
        vr[:, a] = v * (abs(pivot) / pivot)

    # under detailed balance the kernel dimension is the number of connected
    # components of the rate graph, which is exact where eigenvalues are not
    n_components, _ = connected_components(csr_matrix((P - np.diag(np.diag(P))) != 0), directed=False)
    if n_components != 1:
        raise NonUniqueSteadyState(f"rate graph splits into {n_components} components; steady state is not unique")
    k0 = int(np.argmin(np.abs(w)))
    near_zero = int(np.sum(np.abs(w) <= KERNEL_TOL * scale))
    if near_zero > 1:
        warnings.warn(
            f"{near_zero} population eigenvalues within {KERNEL_TOL:.0e} of zero; the slowest modes are quasi-stationary",
            DegenerateLiouvillianEigenvalue,
            stacklevel=3,
        )
    vr[:, k0] /= vr[:, k0].sum()
    w[k0] = 0.0

    degenerate = False
    for group in _clusters(w, EIGENVALUE_CLUSTER_TOL * scale):
        if len(group) == 1:
            a = group[0]
            vl[:, a] /= np.conj(vl[:, a].conj() @ vr[:, a])
        else:
            degenerate = True
            G = vl[:, group].conj().T @ vr[:, group]
            vl[:, group] = vl[:, group] @ np.linalg.inv(G).conj().T
    if degenerate:
        warnings.warn(
            "degenerate population-sector eigenvalues; biorthogonalized blockwise",
            DegenerateLiouvillianEigenvalue,
            stacklevel=3,
        )
    return w, vl, vr, degenerate


def spectral_decomposition(model: DaviesModel) -> LiouvillianSpectrum:
    """Eigenvalues and biorthonormal eigenmatrices of the Davies generator.

    Coherence modes are read off the diagonal of the energy-frame generator;
    the population modes come from the ``d x d`` population block.  Modes are
    sorted by ``|Re lambda|`` ascending, ties broken by ``Im lambda`` ascending
    and then population before coherence.
    """
    d = model.dim
    W = transition_rates(model)
    decay = _decay_rates(W)
    P = W - np.diag(decay)
    w_pop, vl, vr, degenerate_pop = _population_eigensystem(P)

    j, l = np.where(~np.eye(d, dtype=bool))
    e = model.energies
    coh_vals = -0.5 * (decay[j] + decay[l]) - 1j * (e[j] - e[l])

    eigenvalues = np.concatenate([w_pop, coh_vals])
    sectors = np.array([POPULATION] * d + [COHERENCE] * len(coh_vals), dtype=object)
    support = np.concatenate([np.full((d, 2), -1), np.stack([j, l], axis=1)]).astype(int)
    pop_column = np.concatenate([np.arange(d), np.full(len(coh_vals), -1)]).astype(int)

    resolution = 1e-9
    key_re = np.round(np.abs(eigenvalues.real) / resolution)
    key_im = np.round(eigenvalues.imag / resolution)
    key_sector = (sectors == COHERENCE).astype(int)
    order = np.lexsort((key_sector, key_im, key_re))

    eigenvalues = eigenvalues[order]
    degenerate = degenerate_pop or bool(np.any(np.abs(np.diff(eigenvalues)) <= EIGENVALUE_CLUSTER_TOL))
    return LiouvillianSpectrum(
        eigenvalues=eigenvalues,
        sectors=sectors[order],
        support=support[order],
        pop_column=pop_column[order],
        pop_right=vr,
        pop_left=vl,
        basis=model.basis,
        energies=e,
        degenerate_eigenvalues=degenerate,
    )
