import numpy as np
import pytest

from mpemba import linops
from mpemba.errors import NegativeEigenvalue, NonHermitianInput

from helpers import random_hermitian, random_unitary


def test_diagonal_input_is_its_own_spectrum():
    spec = linops.hermitian_eigendecompose(np.diag([2.0, 1.0]))
    np.testing.assert_allclose(spec.values, [2, 1])
    np.testing.assert_allclose(np.abs(spec.basis), np.eye(2))


def test_pauli_x_spectrum():
    spec = linops.hermitian_eigendecompose(np.array([[0, 1], [1, 0]]))
    np.testing.assert_allclose(spec.values, [1, -1])
    # columns proportional to (1, 1) and (1, -1) up to phase
    assert abs(abs(np.vdot(spec.basis[:, 0], [1, 1])) / np.sqrt(2) - 1) < 1e-12
    assert abs(abs(np.vdot(spec.basis[:, 1], [1, -1])) / np.sqrt(2) - 1) < 1e-12


def test_ascending_order():
    spec = linops.hermitian_eigendecompose(np.diag([1.0, 3.0, 2.0]), order="ascending")
    np.testing.assert_allclose(spec.values, [1, 2, 3])


def test_degeneracy_flag():
    zz = np.diag([1.0, -1.0, -1.0, 1.0])
    spec = linops.hermitian_eigendecompose(-zz)
    np.testing.assert_allclose(spec.values, [1, 1, -1, -1])
    assert spec.degenerate


def test_non_hermitian_rejected():
    with pytest.raises(NonHermitianInput):
        linops.hermitian_eigendecompose(np.array([[0, 1], [0, 0]]))


def test_bad_order_rejected():
    with pytest.raises(ValueError):
        linops.hermitian_eigendecompose(np.eye(2), order="sideways")


@pytest.mark.parametrize("dim", [1, 2, 5, 17, 64])
def test_reconstruction(dim, rng):
    M = random_hermitian(dim, rng)
    spec = linops.hermitian_eigendecompose(M)
    assert np.max(np.abs(spec.reconstruct() - M)) <= 1e-10 * max(1, np.abs(M).max())
    assert linops.is_unitary(spec.basis)
    assert np.all(np.diff(spec.values) <= 0)


def test_vectorize_column_stacking():
    X = np.array([[1, 2], [3, 4]])
    np.testing.assert_array_equal(linops.vectorize(X), [1, 3, 2, 4])
    np.testing.assert_array_equal(linops.vectorize(np.eye(2)), [1, 0, 0, 1])


@pytest.mark.parametrize("dim", [1, 2, 3, 6])
def test_vec_consistency(dim, rng):
    A, X, B = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)) for _ in range(3))
    lhs = linops.vectorize(A @ X @ B)
    rhs = linops.sandwich(A, B) @ linops.vectorize(X)
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(1, np.linalg.norm(lhs))


def test_vec_unitary_conjugation(rng):
    U = random_unitary(3, rng)
    X = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    lhs = linops.vectorize(U @ X @ U.conj().T)
    rhs = np.kron(U.conj(), U) @ linops.vectorize(X)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_devectorize_roundtrip(rng):
    X = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    np.testing.assert_array_equal(linops.devectorize(linops.vectorize(X)), X)
    with pytest.raises(ValueError):
        linops.devectorize(np.zeros(5))


def test_spre_spost(rng):
    A, X = (rng.normal(size=(3, 3)) for _ in range(2))
    np.testing.assert_allclose(linops.spre(A) @ linops.vectorize(X), linops.vectorize(A @ X))
    np.testing.assert_allclose(linops.spost(A) @ linops.vectorize(X), linops.vectorize(X @ A))


@pytest.mark.parametrize(
    "M, expected",
    [
        (np.diag([-0.3, 0.3]), np.diag([0.3, 0.3])),
        (np.zeros((2, 2)), np.zeros((2, 2))),
        (np.diag([1.0, -1.0]) - 0.5 * np.eye(2), np.diag([0.5, 1.5])),
    ],
)
def test_matrix_abs_examples(M, expected):
    np.testing.assert_allclose(linops.matrix_abs(M), expected, atol=1e-14)


def test_matrix_abs_spectrum(rng):
    M = random_hermitian(5, rng)
    got = np.sort(np.linalg.eigvalsh(linops.matrix_abs(M)))
    np.testing.assert_allclose(got, np.sort(np.abs(np.linalg.eigvalsh(M))), atol=1e-10)


def test_matrix_log_examples():
    np.testing.assert_allclose(linops.matrix_log_psd(np.eye(3)), np.zeros((3, 3)), atol=1e-15)
    np.testing.assert_allclose(linops.matrix_log_psd(np.diag([np.e, 1.0])), np.diag([1.0, 0.0]), atol=1e-14)


def test_matrix_log_gibbs_qubit():
    p_minus = 0.5 * np.exp(-0.5) / np.cosh(0.5)
    p_plus = 1 - p_minus
    got = linops.matrix_log_psd(np.diag([p_plus, p_minus]))
    np.testing.assert_allclose(np.diag(got).real, np.log([p_plus, p_minus]), atol=1e-14)
    np.testing.assert_allclose([p_plus, p_minus], [0.731059, 0.268941], atol=1e-6)


def test_matrix_log_sentinel_and_floor():
    got = linops.matrix_log_psd(np.diag([1.0, 0.0]))
    np.testing.assert_allclose(got, 0, atol=1e-15)
    with pytest.raises(NegativeEigenvalue):
        linops.matrix_log_psd(np.diag([1.0, -1e-6]))


def test_as_operator_rejects_bad_input():
    with pytest.raises(ValueError):
        linops.as_operator(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        linops.as_operator(np.array([[np.nan]]))
