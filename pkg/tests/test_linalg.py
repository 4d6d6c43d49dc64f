import numpy as np
import pytest
from hypothesis import given, strategies as st

from mpcomm import linalg

X = np.array([[0, 1], [1, 0]])
Z = np.diag([1.0, -1.0])


def test_kron_flips_both_qubits():
    ket00 = np.array([1, 0, 0, 0])
    assert np.array_equal(linalg.kron(X, X) @ ket00, [0, 0, 0, 1])


def test_partial_trace_of_bell_state():
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    rho = linalg.projector(phi)
    for side in "AB":
        assert np.allclose(linalg.partial_trace(rho, (2, 2), side), np.eye(2) / 2)


def test_partial_trace_product():
    rng = np.random.default_rng(3)
    a = linalg.random_pure_state(2, rng)
    b = linalg.random_pure_state(3, rng)
    ab = linalg.kron(a, b)
    assert np.allclose(linalg.partial_trace(ab, (2, 3), "B"), a)
    assert np.allclose(linalg.partial_trace(ab, (2, 3), "A"), b)
    with pytest.raises(linalg.DimensionError):
        linalg.partial_trace(ab, (3, 3), "A")
    with pytest.raises(ValueError):
        linalg.partial_trace(ab, (2, 3), "C")


def test_qubit_spectrum():
    rho = 0.5 * (np.eye(2) + 0.6 * Z)
    w, v = linalg.hermitian_eig(rho)
    assert np.allclose(w, [0.2, 0.8])
    assert np.allclose(v @ np.diag(w) @ v.conj().T, rho)


def test_eig_rejects_nonhermitian():
    with pytest.raises(ValueError):
        linalg.hermitian_eig(np.array([[0, 1], [0, 0]]))


@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_eig_reconstructs(d, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = a + a.conj().T
    w, v = linalg.hermitian_eig(h)
    assert np.all(np.diff(w) >= -1e-12)
    assert np.max(np.abs(v @ np.diag(w) @ v.conj().T - h)) < linalg.RECONSTRUCTION_TOL * 100
    assert np.allclose(v.conj().T @ v, np.eye(d))
    top = linalg.top_eigvec(h)
    assert np.isclose(np.vdot(top, h @ top).real, w[-1])


def test_haar_mean_is_maximally_mixed():
    rng = np.random.default_rng(11)
    mean = sum(linalg.random_pure_state(2, rng) for _ in range(10_000)) / 10_000
    assert np.max(np.abs(mean - np.eye(2) / 2)) < 0.02


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_random_state_is_pure(d, seed):
    r = linalg.random_pure_state(d, seed)
    assert linalg.is_hermitian(r)
    assert np.isclose(np.trace(r).real, 1)
    assert np.allclose(r @ r, r)


def test_random_unitary():
    u = linalg.random_unitary(4, np.random.default_rng(0))
    assert np.allclose(u @ u.conj().T, np.eye(4))
