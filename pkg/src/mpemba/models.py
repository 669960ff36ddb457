"""Concrete systems: the driven two-level oracle and open spin chains.

The two-level model uses a fixed energy basis ``U1 = i(|1><0| - |0><1|)`` so
that its closed-form Bloch vectors, distances and spectrum can be compared to
numerics without phase ambiguity.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import linops
from .davies import (
    COHERENCE,
    POPULATION,
    BathStatistics,
    DaviesModel,
    LiouvillianSpectrum,
    pair_rates,
)
from .errors import DimensionCap
from .linops import HermitianSpectrum
from .protocol import PermutationSpec

DEFAULT_CHAIN_CAP = 7

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# energy basis of the two-level model: column 0 belongs to the upper level
TWO_LEVEL_U1 = np.array([[0, -1j], [1j, 0]], dtype=complex)
_MINUS = np.array([1, -1]) / np.sqrt(2)
_PLUS = np.array([1, 1]) / np.sqrt(2)
# -i|0><-| + |1><+|
TWO_LEVEL_LAMBDA = -1j * np.outer([1, 0], _MINUS) + np.outer([0, 1], _PLUS)


@dataclass(frozen=True)
class TwoLevelConfig:
    eps1: float = 1.0
    eps2: float = 0.0
    gamma: float = 1.0
    temperature: float = 1.0
    k_B: float = 1.0
    statistics: BathStatistics = BathStatistics.BOSE

    def __post_init__(self):
        object.__setattr__(self, "statistics", BathStatistics.parse(self.statistics))
        if not self.eps1 > self.eps2:
            raise ValueError("eps1 must exceed eps2")
        if self.gamma <= 0 or self.temperature <= 0 or self.k_B <= 0:
            raise ValueError("gamma, temperature and k_B must be positive")

    @property
    def delta(self) -> float:
        return self.eps1 - self.eps2

    @property
    def half_gap(self) -> float:
        """``delta / (2 k_B T)``."""
        return self.delta / (2 * self.k_B * self.temperature)

    @property
    def total_rate(self) -> float:
        """``xi + chi``: ``gamma coth(delta / 2 k_B T)`` for Bose, ``gamma`` for Fermi."""
        if self.statistics is BathStatistics.BOSE:
            return self.gamma / np.tanh(self.half_gap)
        return self.gamma

    def boltzmann_weights(self) -> tuple[float, float]:
        """``(p_minus, p_plus)``: weights of the upper and lower level."""
        x = self.half_gap
        p_minus = 0.5 * np.exp(-x) / np.cosh(x)
        p_plus = 0.5 * np.exp(x) / np.cosh(x)
        return p_minus, p_plus


def two_level_model(cfg: TwoLevelConfig, **kwargs) -> DaviesModel:
    spectrum = HermitianSpectrum(np.array([cfg.eps1, cfg.eps2], dtype=float), TWO_LEVEL_U1.copy())
    return DaviesModel(spectrum, cfg.gamma, cfg.temperature, k_B=cfg.k_B, statistics=cfg.statistics, **kwargs)


def two_level_probe(cfg: TwoLevelConfig | None = None) -> np.ndarray:
    """``Lam diag(0, 1) Lam^dag``, a pure state with Bloch vector ``(0, -1, 0)``."""
    D = np.diag([0.0, 1.0])
    return TWO_LEVEL_LAMBDA @ D @ TWO_LEVEL_LAMBDA.conj().T


@dataclass(frozen=True)
class TwoLevelAnalytic:
    r_plain: np.ndarray
    r_dressed: np.ndarray
    r_ss: np.ndarray
    td_plain: float
    td_dressed: float


def two_level_analytic(cfg: TwoLevelConfig, t: float) -> TwoLevelAnalytic:
    """Closed-form Bloch vectors and trace distances of the plain and dressed qubit."""
    x = cfg.half_gap
    c = cfg.total_rate * t
    th = np.tanh(x)
    decay = np.exp(-c)
    half = np.exp(-0.5 * c)
    dt = cfg.delta * t
    r_plain = np.array([-half * np.sin(dt), -half * np.cos(dt), (1 - decay) * th])
    # 2 e^{2x} / (e^{2x} + 1) written to avoid overflow
    r_dressed = np.array([0.0, 0.0, 2 * (1 - decay) / (1 + np.exp(-2 * x)) - 1])
    r_ss = np.array([0.0, 0.0, th])
    td_plain = 0.5 * half * np.sqrt(1 + decay * th**2)
    # sech^2(x) / (2 (1 - tanh x)) simplified so it stays finite when cold
    td_dressed = decay / (1 + np.exp(-2 * x))
    return TwoLevelAnalytic(r_plain, r_dressed, r_ss, float(td_plain), float(td_dressed))


def table1_spectrum(cfg: TwoLevelConfig) -> LiouvillianSpectrum:
    """Closed-form spectrum of the two-level generator with its tabulated eigenmatrices."""
    kappa = cfg.total_rate
    p_minus, p_plus = cfg.boltzmann_weights()
    lam2 = -0.5 * kappa - 1j * cfg.delta
    eigenvalues = np.array([0.0, lam2, np.conj(lam2), -kappa], dtype=complex)
    # energy frame: index 0 is the upper level
    pop_right = np.array([[p_minus, -1.0], [p_plus, 1.0]], dtype=complex)
    pop_left = np.array([[1.0, -p_plus], [1.0, p_minus]], dtype=complex)
    return LiouvillianSpectrum(
        eigenvalues=eigenvalues,
        sectors=np.array([POPULATION, COHERENCE, COHERENCE, POPULATION], dtype=object),
        support=np.array([[-1, -1], [0, 1], [1, 0], [-1, -1]]),
        pop_column=np.array([0, -1, -1, 1]),
        pop_right=pop_right,
        pop_left=pop_left,
        basis=TWO_LEVEL_U1.copy(),
        energies=np.array([cfg.eps1, cfg.eps2], dtype=float),
    )


def two_level_rates(cfg: TwoLevelConfig) -> tuple[float, float]:
    """``(xi, chi)`` of the single jump pair."""
    return pair_rates(two_level_model(cfg), 1, 0)


class ChainKind(enum.Enum):
    TFI = "tfi"
    XXZ = "xxz"


@dataclass(frozen=True)
class SpinChainConfig:
    """Open spin chain; ``h`` is used by TFI, ``Delta`` by XXZ."""

    kind: ChainKind
    N: int
    J: float = 1.0
    h: float = 0.5
    Delta: float = 0.5
    cap: int = DEFAULT_CHAIN_CAP

    def __post_init__(self):
        object.__setattr__(self, "kind", ChainKind(str(getattr(self.kind, "value", self.kind)).lower()))
        if self.N < 1:
            raise ValueError("chain needs at least one site")

    @property
    def dim(self) -> int:
        return 2**self.N


def site_operator(op, site: int, N: int) -> np.ndarray:
    """``op`` on ``site`` (0 is the most significant bit), identity elsewhere."""
    factors = [np.eye(2)] * N
    factors[site] = op
    return reduce(np.kron, factors)


def build_chain(cfg: SpinChainConfig) -> np.ndarray:
    """Chain Hamiltonian in the computational basis, open boundaries."""
    if cfg.N > cfg.cap:
        raise DimensionCap(f"N = {cfg.N} exceeds the cap of {cfg.cap} sites")
    N = cfg.N
    H = np.zeros((cfg.dim, cfg.dim), dtype=complex)
    bonds = [(j, j + 1) for j in range(N - 1)]
    if cfg.kind is ChainKind.TFI:
        for a, b in bonds:
            H -= cfg.J * site_operator(SIGMA_Z, a, N) @ site_operator(SIGMA_Z, b, N)
        for j in range(N):
            H += cfg.h * site_operator(SIGMA_X, j, N)
    else:
        for a, b in bonds:
            H += cfg.J * site_operator(SIGMA_X, a, N) @ site_operator(SIGMA_X, b, N)
            H += cfg.J * site_operator(SIGMA_Y, a, N) @ site_operator(SIGMA_Y, b, N)
            H += cfg.Delta * site_operator(SIGMA_Z, a, N) @ site_operator(SIGMA_Z, b, N)
    return H


def chain_model(cfg: SpinChainConfig, gamma: float, temperature: float, **kwargs) -> DaviesModel:
    return DaviesModel.from_hamiltonian(build_chain(cfg), gamma, temperature, **kwargs)


def uniform_superposition_probe(H_spectrum: HermitianSpectrum) -> np.ndarray:
    """``U1 |phi><phi| U1^dag`` with ``|phi>`` the uniform superposition of basis states."""
    d = H_spectrum.dim
    phi = np.full(d, 1 / np.sqrt(d))
    psi = H_spectrum.basis @ phi
    return np.outer(psi, psi.conj())


def sigma_x_all_permutation(N: int) -> PermutationSpec:
    """Bit-flip of every site, ``j -> 2^N - 1 - j``."""
    d = 2**N
    return PermutationSpec(tuple(d - 1 - j for j in range(d)))


def is_real_symmetric(H, tol: float = 1e-14) -> bool:
    H = np.asarray(H)
    return bool(np.max(np.abs(H.imag)) <= tol and linops.is_hermitian(H.real, tol))
