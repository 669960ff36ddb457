"""Dense complex operator algebra.

Hermitian eigendecomposition, spectral matrix functions and the column-stacking
vectorization used to turn operator maps into superoperator matrices.  With
column stacking ``vec(A @ X @ B) == kron(B.T, A) @ vec(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NegativeEigenvalue, NonHermitianInput

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
PSD_FLOOR = -1e-10
DEGENERACY_TOL = 1e-10
LOG_CUTOFF = 1e-14


@dataclass(frozen=True)
class HermitianSpectrum:
    """Eigenvalues and eigenvector basis of a Hermitian operator.

    ``basis[:, l]`` is the eigenvector belonging to ``values[l]``.
    ``degenerate`` is set when two neighbouring values differ by at most
    ``DEGENERACY_TOL``; callers decide what to do with it.
    """

    values: np.ndarray
    basis: np.ndarray
    order: str = "descending"
    degenerate: bool = False

    @property
    def dim(self) -> int:
        return len(self.values)

    def reconstruct(self) -> np.ndarray:
        return (self.basis * self.values) @ self.basis.conj().T

    def min_gap(self) -> float:
        if self.dim < 2:
            return np.inf
        return float(np.min(np.abs(np.diff(self.values))))


def as_operator(M) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("operator has non-finite entries")
    return M


def hermiticity_error(M) -> float:
    M = np.asarray(M)
    return float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0


def is_hermitian(M, tol: float = HERMITIAN_TOL) -> bool:
    return hermiticity_error(M) <= tol


def dagger(M) -> np.ndarray:
    return np.asarray(M).conj().T


def _check_hermitian(M, tol):
    err = hermiticity_error(M)
    if err > tol:
        raise NonHermitianInput(f"max |M - M^dag| = {err:.3e} exceeds {tol:.1e}")


def hermitian_eigendecompose(M, order: str = "descending", tol: float = HERMITIAN_TOL) -> HermitianSpectrum:
    """Diagonalize a Hermitian matrix.

    Parameters
    ----------
    M : array_like
        Square Hermitian matrix.
    order : {"descending", "ascending"}
        Sort order of the returned eigenvalues.
    tol : float
        Largest tolerated entry of ``M - M^dag``.
    """
    if order not in ("descending", "ascending"):
        raise ValueError(f"unknown order {order!r}")
    M = as_operator(M)
    scale = max(1.0, float(np.max(np.abs(M))))
    _check_hermitian(M, tol * scale)
    values, basis = np.linalg.eigh(0.5 * (M + M.conj().T))
    if order == "descending":
        values = values[::-1]
        basis = basis[:, ::-1]
    values = np.ascontiguousarray(values)
    basis = np.ascontiguousarray(basis)
    degenerate = bool(len(values) > 1 and np.min(np.abs(np.diff(values))) <= DEGENERACY_TOL)
    return HermitianSpectrum(values=values, basis=basis, order=order, degenerate=degenerate)


def vectorize(X) -> np.ndarray:
    """Column-stack a matrix: ``[[a, b], [c, d]] -> (a, c, b, d)``."""
    X = np.asarray(X)
    return X.reshape(-1, order="F")


def devectorize(v, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    if dim * dim != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape(dim, dim, order="F")


def sandwich(A, B) -> np.ndarray:
    """Superoperator matrix of ``X -> A @ X @ B``."""
    return np.kron(np.asarray(B).T, np.asarray(A))


def spre(A) -> np.ndarray:
    A = np.asarray(A)
    return sandwich(A, np.eye(A.shape[0]))


def spost(B) -> np.ndarray:
    B = np.asarray(B)
    return sandwich(np.eye(B.shape[0]), B)


def matrix_abs(M) -> np.ndarray:
    """``|M| = sqrt(M^dag M)`` for Hermitian ``M``, via its eigendecomposition."""
    spec = hermitian_eigendecompose(M)
    return (spec.basis * np.abs(spec.values)) @ spec.basis.conj().T


def matrix_log_psd(M, cutoff: float = LOG_CUTOFF) -> np.ndarray:
    """Spectral natural logarithm of a positive semidefinite matrix.

    Eigenvalues below ``cutoff`` are mapped to ``0`` (a sentinel standing for
    ``0 * ln 0 = 0`` once contracted against a state that has no weight there).
    """
    spec = hermitian_eigendecompose(M)
    scale = max(1.0, float(np.max(np.abs(spec.values))))
    if spec.values.min() < PSD_FLOOR * scale:
        raise NegativeEigenvalue(f"eigenvalue {spec.values.min():.3e} below PSD floor")
    logs = np.zeros_like(spec.values)
    keep = spec.values > cutoff
    logs[keep] = np.log(spec.values[keep])
    return (spec.basis * logs) @ spec.basis.conj().T


def is_unitary(U, tol: float = UNITARY_TOL) -> bool:
    U = np.asarray(U)
    return bool(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) <= tol)
