"""See-saw lower bounds on the quantum value of a functional.

Each round optimizes Alice's states, then Bob's, then the joint measurement,
holding the other two fixed.  Every sub-problem is solved to optimality, so
the objective never decreases within a restart; a step that would lower it
(solver noise) is rejected.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import linalg, sdp
from .model import (
    DistinguishabilityBound,
    Functional,
    QuantumStrategy,
    Scenario,
    ValidationError,
    behavior_from_strategy,
    evaluate_functional,
)

log = logging.getLogger(__name__)

WORKERS_ENV = "MPCOMM_WORKERS"
ALICE, BOB = "Alice", "Bob"


class SeesawError(RuntimeError):
    def __init__(self, msg, statuses=()):
        super().__init__(msg)
        self.statuses = list(statuses)


@dataclass
class SeesawConfig:
    d: int = 2
    restarts: int = 100
    max_rounds: int = 300
    conv_tol: float = 1e-9
    seed: int = 0
    workers: int | None = None  # None: read MPCOMM_WORKERS, default 1

    def __post_init__(self):
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")
        if not self.conv_tol > 0:
            raise ValidationError("conv_tol must be positive")
        if self.d < 1:
            raise ValidationError("d must be >= 1")


@dataclass
class SeesawResult:
    value: float
    strategy: QuantumStrategy
    trace: list = field(default_factory=list)
    restart_index: int = 0
    values: list = field(default_factory=list)  # final value per restart


def objective(c: np.ndarray, A, B, M) -> float:
    """``sum c[x,y,z] Tr[(A_x (x) B_y) M_z]`` for stacked arrays."""
    da, db = A.shape[1], B.shape[1]
    Mt = M.reshape(len(M), da, db, da, db)
    return float(np.einsum("xyz,xik,yjl,zklij->", c, A, B, Mt, optimize=True).real)


# ---------------------------------------------------------------------------
# effective operators


def alice_operators(c, B, M) -> np.ndarray:
    """F_x = sum_{y,z} c[x,y,z] Tr_B[(I (x) sigma_y) M_z]."""
    nz = M.shape[0]
    db = B.shape[1]
    da = M.shape[1] // db
    Mt = M.reshape(nz, da, db, da, db)
    # F[i,k] = sum_{j,l} s[l,j] M[(i,j),(k,l)], so that Tr[(rho (x) s) M] = Tr[rho F]
    T = np.einsum("ylj,zijkl->yzik", B, Mt, optimize=True)
    F = np.einsum("xyz,yzik->xik", c, T, optimize=True)
    return 0.5 * (F + F.conj().transpose(0, 2, 1))


def bob_operators(c, A, M) -> np.ndarray:
    nz = M.shape[0]
    da = A.shape[1]
    db = M.shape[1] // da
    Mt = M.reshape(nz, da, db, da, db)
    T = np.einsum("xki,zijkl->xzjl", A, Mt, optimize=True)
    F = np.einsum("xyz,xzjl->yjl", c, T, optimize=True)
    return 0.5 * (F + F.conj().transpose(0, 2, 1))


def measurement_operators(c, A, B) -> np.ndarray:
    """G_z = sum_{x,y} c[x,y,z] rho_x (x) sigma_y."""
    da, db = A.shape[1], B.shape[1]
    G = np.einsum("xyz,xik,yjl->zijkl", c, A, B, optimize=True).reshape(c.shape[2], da * db, da * db)
    return 0.5 * (G + G.conj().transpose(0, 2, 1))


# ---------------------------------------------------------------------------
# steps


def _hermitian_basis(n: int):
    """Real-orthogonal basis of n x n Hermitian matrices (n^2 elements)."""
    out = []
    for i in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[i, i] = 1
        out.append(e)
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = e[j, i] = 1
            out.append(e)
            e = np.zeros((n, n), dtype=complex)
            e[i, j], e[j, i] = -1j, 1j
            out.append(e)
    return out


def _states_top(F) -> np.ndarray:
    out = []
    for f in F:
        v = linalg.top_eigvec(f)
        out.append(linalg.projector(v))
    return np.array(out)


def _states_sdp(F, D: float):
    """max sum <F_x, rho_x>  s.t.  Tr rho_x = 1, Theta >= rho_x / n, Tr Theta <= D."""
    n, d = F.shape[0], F.shape[1]
    # blocks: rho_1..rho_n, Theta, S_1..S_n with S_x = Theta - rho_x / n
    nb = 2 * n + 1
    th = n
    sizes = [d] * nb
    obj = [F[x] for x in range(n)] + [None] * (n + 1)
    eqs = []
    for x in range(n):
        eqs.append(({x: np.eye(d)}, 1.0))
    basis = _hermitian_basis(d)
    for x in range(n):
        for E in basis:
            # <E, Theta> - <E, rho_x>/n - <E, S_x> = 0
            eqs.append(({th: E, x: -E / n, n + 1 + x: -E}, 0.0))
    ineqs = [({th: np.eye(d)}, float(D))]
    sol = sdp.solve_sdp(sdp.SdpProblem(sizes, obj, eqs, ineqs))
    if sol.status != sdp.OPTIMAL:
        return None, sol.status
    return np.array([_clean_state(sol.blocks[x]) for x in range(n)]), sol.status


def _clean_state(r):
    r = 0.5 * (r + r.conj().T)
    w, V = np.linalg.eigh(r)
    w = np.clip(w, 0, None)
    r = (V * w) @ V.conj().T
    return r / np.trace(r).real


def optimize_states_step(c, other, M, which: str, constraint=None, n_inputs=None):
    """Best states for one sender given the other sender's states and the POVM.

    Returns ``(states, status)``; ``status`` is ``"optimal"`` or the SDP status.
    """
    F = alice_operators(c, other, M) if which == ALICE else bob_operators(c, other, M)
    if isinstance(constraint, DistinguishabilityBound):
        D = constraint.D1 if which == ALICE else constraint.D2
        return _states_sdp(F, float(D))
    return _states_top(F), sdp.OPTIMAL


def binary_measurement(G) -> np.ndarray:
    """Optimal two-outcome POVM: projector onto the positive part of G_0 - G_1."""
    w, V = np.linalg.eigh(G[0] - G[1])
    P = V[:, w > 0]
    M0 = P @ P.conj().T
    return np.array([M0, np.eye(G.shape[1]) - M0])


def sdp_measurement(G):
    nz, n = G.shape[0], G.shape[1]
    eqs = [({z: E for z in range(nz)}, float(np.trace(E).real)) for E in _hermitian_basis(n)]
    sol = sdp.solve_sdp(sdp.SdpProblem([n] * nz, list(G), eqs))
    if sol.status != sdp.OPTIMAL:
        return None, sol.status
    M = np.array([0.5 * (m + m.conj().T) for m in sol.blocks])
    return M, sol.status


def optimize_measurement_step(c, A, B, use_sdp: bool | None = None):
    """Optimal POVM for fixed states; closed form for two outcomes unless ``use_sdp``."""
    G = measurement_operators(c, A, B)
    if use_sdp is None:
        use_sdp = G.shape[0] > 2
    if not use_sdp:
        return binary_measurement(G), sdp.OPTIMAL
    return sdp_measurement(G)


# ---------------------------------------------------------------------------
# driver


def _one_restart(args):
    s, c, cfg, seed_seq, index = args
    rng = np.random.default_rng(seed_seq)
    nx, ny, nz = s.shape
    d = cfg.d
    dist = isinstance(s.constraint, DistinguishabilityBound)
    A = np.array([linalg.random_pure_state(d, rng) for _ in range(nx)])
    B = np.array([linalg.random_pure_state(d, rng) for _ in range(ny)])
    M, st = optimize_measurement_step(c, A, B)
    if M is None:
        return None, st, index
    val = objective(c, A, B, M) if not dist else -np.inf
    trace = [] if dist else [val]
    stall = 0
    for _ in range(cfg.max_rounds):
        start = val
        for which in (ALICE, BOB):
            other = B if which == ALICE else A
            new, st = optimize_states_step(c, other, M, which, s.constraint)
            if new is None:
                return None, st, index
            cand = (new, B) if which == ALICE else (A, new)
            v = objective(c, cand[0], cand[1], M)
            if v >= val or not np.isfinite(val):
                A, B = cand
                val = v
        newM, st = optimize_measurement_step(c, A, B)
        if newM is None:
            return None, st, index
        v = objective(c, A, B, newM)
        if v >= val:
            M, val = newM, v
        trace.append(val)
        if np.isfinite(start) and val - start < cfg.conv_tol:
            stall += 1
            if stall >= 3:
                break
        else:
            stall = 0
    strat = QuantumStrategy(list(A), list(B), list(M))
    return (val, strat, trace), sdp.OPTIMAL, index


def _workers(cfg: SeesawConfig) -> int:
    if cfg.workers is not None:
        return max(1, cfg.workers)
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def run_seesaw(s: Scenario, f: Functional, cfg: SeesawConfig | None = None) -> SeesawResult:
    """Best see-saw value over ``cfg.restarts`` seeded restarts."""
    cfg = cfg or SeesawConfig()
    f.check(s)
    if s.is_dimension_bounded and s.constraint.d != cfg.d:
        s = s.with_constraint(type(s.constraint)(cfg.d))
    c = np.asarray(f.coeffs, dtype=float)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    jobs = [(s, c, cfg, seeds[i], i) for i in range(cfg.restarts)]
    nw = _workers(cfg)
    if nw > 1 and cfg.restarts > 1:
        with ProcessPoolExecutor(max_workers=nw) as ex:
            outs = list(ex.map(_one_restart, jobs))
    else:
        outs = [_one_restart(j) for j in jobs]
    best = None
    values = [None] * cfg.restarts
    statuses = []
    for res, st, i in outs:
        statuses.append(st)
        if res is None:
            continue
        values[i] = res[0]
        # (value, -index) ordering: ties go to the earliest restart
        if best is None or res[0] > best[0][0] or (res[0] == best[0][0] and i < best[1]):
            best = (res, i)
    if best is None:
        raise SeesawError("all see-saw restarts failed", statuses)
    (val, strat, trace), idx = best
    value = float(evaluate_functional(f, behavior_from_strategy(strat, check=False)))
    return SeesawResult(value, strat, trace, idx, values)
