import numpy as np
from scipy.stats import unitary_group

from mpemba import davies


def random_density(dim, rng, rank=None):
    rank = dim if rank is None else rank
    A = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real


def random_hermitian(dim, rng):
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (A + A.conj().T)


def random_unitary(dim, rng):
    return unitary_group.rvs(dim, random_state=rng)


def random_pure(dim, rng):
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_model(dim, rng, gamma=1.0, temperature=0.7, statistics="bose"):
    H = random_hermitian(dim, rng)
    return davies.DaviesModel.from_hamiltonian(H, gamma, temperature, statistics=statistics)
