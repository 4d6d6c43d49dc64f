import numpy as np
import pytest
from fractions import Fraction
from hypothesis import given, settings, strategies as st

from mpcomm import linalg, polytope, sdp
from mpcomm.sdp import SdpProblem, solve_lmi, solve_sdp


def _basis(n):
    out = []
    for i in range(n):
        for j in range(i, n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = e[j, i] = 1
            out.append(e)
            if i != j:
                e = np.zeros((n, n), dtype=complex)
                e[i, j], e[j, i] = -1j, 1j
                out.append(e)
    return out


def discrimination(states, priors):
    """max sum_k p_k Tr[rho_k M_k] over POVMs."""
    n = states[0].shape[0]
    obj = [p * r for p, r in zip(priors, states)]
    eqs = [({k: E for k in range(len(states))}, float(np.trace(E).real)) for E in _basis(n)]
    return solve_sdp(SdpProblem([n] * len(states), obj, eqs))


def test_helstrom_zero_plus():
    r0 = linalg.projector([1, 0])
    r1 = linalg.projector(np.array([1, 1]) / np.sqrt(2))
    sol = discrimination([r0, r1], [0.5, 0.5])
    assert sol.optimal
    assert abs(sol.value - (0.5 + np.sqrt(2) / 4)) < 1e-7
    assert abs(sol.value - sol.dual_value) < 1e-7


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 4), st.floats(0.1, 0.9), st.integers(0, 2**32 - 1))
def test_helstrom_random_mixed(d, p0, seed):
    rng = np.random.default_rng(seed)
    r = []
    for _ in range(2):
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        m = g @ g.conj().T
        r.append(m / np.trace(m).real)
    sol = discrimination(r, [p0, 1 - p0])
    assert sol.optimal
    closed = 0.5 * (1 + np.abs(np.linalg.eigvalsh(p0 * r[0] - (1 - p0) * r[1])).sum())
    assert abs(sol.value - closed) < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.booleans(), st.integers(0, 2**32 - 1))
def test_largest_eigenvalue(n, cplx, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + (1j * rng.standard_normal((n, n)) if cplx else 0)
    C = a + a.conj().T
    sol = solve_sdp(SdpProblem([n], [C], [([np.eye(n)], 1.0)]))
    assert sol.optimal
    assert abs(sol.value - np.linalg.eigvalsh(C)[-1]) < 1e-6
    res = sdp.verify(sol_problem := SdpProblem([n], [C], [([np.eye(n)], 1.0)]), sol.blocks, sol.y)
    assert res["primal"] < 1e-6 and res["min_eig"] > -1e-8 and abs(res["gap"]) < 1e-6
    assert list(sol_problem.complex_blocks) == [cplx and n > 1]


def test_lovasz_theta_pentagon():
    n = 5
    edges = [(i, (i + 1) % n) for i in range(n)]
    eqs = [([np.eye(n)], 1.0)]
    for i, j in edges:
        e = np.zeros((n, n))
        e[i, j] = e[j, i] = 1
        eqs.append(([e], 0.0))
    sol = solve_sdp(SdpProblem([n], [np.ones((n, n))], eqs))
    assert sol.optimal and abs(sol.value - np.sqrt(5)) < 1e-7


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 4), st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_diagonal_blocks_match_exact_lp(n, m, seed):
    # max c.x  s.t.  A x <= b, x >= 0 with 1x1 blocks, against the exact simplex
    rng = np.random.default_rng(seed)
    A = rng.integers(0, 4, (m, n))
    A[:, A.sum(axis=0) == 0] = 1
    b = rng.integers(1, 6, m)
    c = rng.integers(-2, 5, n)
    ineqs = [([np.array([[float(A[i, j])]]) for j in range(n)], float(b[i])) for i in range(m)]
    sol = solve_sdp(SdpProblem([1] * n, [np.array([[float(v)]]) for v in c], [], ineqs))
    cols = [[Fraction(int(v)) for v in row] + [Fraction(int(i == k)) for k in range(m)] for i, row in enumerate(A)]
    exact, _ = polytope.simplex_standard([Fraction(int(v)) for v in c] + [Fraction(0)] * m, cols, [Fraction(int(v)) for v in b])
    assert sol.optimal
    assert abs(sol.value - float(exact)) < 1e-6 * (1 + abs(float(exact)))


def test_complex_matches_embedded():
    rng = np.random.default_rng(4)
    n = 3
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    C = g + g.conj().T
    h = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    H = h + h.conj().T
    direct = solve_sdp(SdpProblem([n], [C], [([np.eye(n)], 1.0)], [([H], 0.3)]))
    Ce, He, Ie = sdp.embed(C), sdp.embed(H), sdp.embed(np.eye(n))
    real = solve_sdp(SdpProblem([2 * n], [0.5 * Ce], [([0.5 * Ie], 1.0)], [([0.5 * He], 0.3)]))
    assert direct.optimal and real.optimal
    assert abs(direct.value - real.value) < 1e-6
    assert np.allclose(sdp.unembed(sdp.embed(C)), C)


def test_infeasible_and_unbounded():
    sol = solve_sdp(SdpProblem([2], [np.eye(2)], [([np.eye(2)], -1.0)]))
    assert sol.status == sdp.INFEASIBLE
    e00 = np.diag([1.0, 0.0])
    sol = solve_sdp(SdpProblem([2], [np.eye(2)], [([e00], 1.0)]))
    assert sol.status == sdp.UNBOUNDED


def test_problem_validation():
    with pytest.raises(sdp.SdpError):
        SdpProblem([2], [np.array([[0, 1], [0, 0]])])
    with pytest.raises(sdp.SdpError):
        SdpProblem([2], [np.eye(3)])


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_lmi_smallest_eigenvalue(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    A = a + a.T
    # max t  s.t.  A - t I >= 0
    sol = solve_lmi([1.0], [A], [[-np.eye(n)]])
    assert sol.status == sdp.OPTIMAL
    assert abs(sol.value - np.linalg.eigvalsh(A)[0]) < 1e-6
    assert abs(sol.y[0] - sol.value) < 1e-7


def test_lmi_with_linear_inequality():
    # max t  s.t.  I - t I >= 0 and t <= 0.25
    sol = solve_lmi([1.0], [np.eye(2)], [[-np.eye(2)]], ineqs=[([1.0], 0.25)])
    assert abs(sol.value - 0.25) < 1e-7


def test_sdpa_export():
    text = sdp.to_sdpa(SdpProblem([2], [np.eye(2)], [([np.eye(2)], 1.0)]))
    lines = [l for l in text.splitlines() if not l.startswith(("*", '"'))]
    assert lines[0].split()[0] == "1"
