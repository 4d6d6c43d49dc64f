"""Small dense complex linear algebra used by the quantum-side code.

Matrices are plain ``numpy.ndarray`` objects; nothing here holds state.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

HERMITIAN_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-10


class DimensionError(ValueError):
    pass


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a), np.asarray(b))


def partial_trace(m, dims: tuple[int, int], side: str) -> np.ndarray:
    """Trace out subsystem ``side`` ("A" or "B") of a bipartite operator."""
    m = np.asarray(m)
    da, db = dims
    if m.shape != (da * db, da * db):
        raise DimensionError(f"expected a {da * db}x{da * db} matrix, got {m.shape}")
    t = m.reshape(da, db, da, db)
    if side == "B":
        return np.einsum("ijkj->ik", t)
    if side == "A":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"side must be 'A' or 'B', not {side!r}")


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.max(np.abs(a - a.conj().T), initial=0.0) <= tol


def hermitian_eig(a) -> Spectrum:
    a = np.asarray(a)
    if not is_hermitian(a):
        raise ValueError("matrix is not Hermitian within tolerance")
    w, v = np.linalg.eigh(a)
    return Spectrum(w, v)


def top_eigvec(a) -> np.ndarray:
    """Eigenvector for the largest eigenvalue of a Hermitian matrix."""
    _, v = np.linalg.eigh(a)
    return v[:, -1]


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def random_pure_state(d: int, seed=None) -> np.ndarray:
    """Haar-random pure state as a density matrix.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    rng = np.random.default_rng(seed)
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    psi /= np.linalg.norm(psi)
    return projector(psi)


def random_unitary(d: int, rng) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def min_eig(a) -> float:
    return float(np.linalg.eigvalsh(a)[0])
