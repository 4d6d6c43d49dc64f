"""Dense primal-dual interior point solver for small semidefinite programs.

Problems are stated as

    maximize    sum_k <C_k, X_k>
    subject to  sum_k <A_ik, X_k>  = b_i      (equalities)
                sum_k <G_jk, X_k> <= h_j      (inequalities)
                X_k >= 0                      (Hermitian PSD blocks)

Complex Hermitian blocks are mapped to real symmetric blocks of twice the
size with ``H -> [[Re H, -Im H], [Im H, Re H]]``; inequality slacks live in a
nonnegative orthant.  The solver runs a homogeneous self-dual embedding with
Nesterov-Todd scaling and a Mehrotra predictor-corrector step, so
infeasible and unbounded problems are reported through the embedding's
certificates rather than by running out of iterations.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITER = "max_iter"

TARGET_TOL = 1e-8
ACCEPT_TOL = 1e-7
MAX_ITERATIONS = 500
HERMITIAN_TOL = 1e-12


class SdpError(ValueError):
    pass


@dataclass
class SdpProblem:
    """Block SDP in maximization form.

    ``objective`` is one matrix per block (``None`` for zero).  Each
    constraint is ``(coeffs, rhs)`` with ``coeffs`` either a list aligned
    with the blocks or a ``{block_index: matrix}`` mapping.
    """

    block_sizes: list
    objective: list
    eq_constraints: list = field(default_factory=list)
    ineq_constraints: list = field(default_factory=list)

    def __post_init__(self):
        self.block_sizes = [int(n) for n in self.block_sizes]
        if len(self.objective) != len(self.block_sizes):
            raise SdpError("objective must give one matrix (or None) per block")
        self.objective = [self._mat(k, c) for k, c in enumerate(self.objective)]
        self.eq_constraints = [(self._coeffs(c), float(b)) for c, b in self.eq_constraints]
        self.ineq_constraints = [(self._coeffs(c), float(b)) for c, b in self.ineq_constraints]
        self.complex_blocks = [False] * len(self.block_sizes)
        for k in range(len(self.block_sizes)):
            mats = [self.objective[k]] + [c[k] for c, _ in self.eq_constraints + self.ineq_constraints]
            self.complex_blocks[k] = any(m is not None and np.iscomplexobj(m) and np.abs(m.imag).max() > 0 for m in mats)

    def _mat(self, k, m):
        if m is None:
            return None
        n = self.block_sizes[k]
        m = np.asarray(m)
        if m.ndim == 0 and n == 1:
            m = m.reshape(1, 1)
        if m.shape != (n, n):
            raise SdpError(f"block {k}: coefficient shape {m.shape} != ({n}, {n})")
        if np.abs(m - m.conj().T).max(initial=0.0) > HERMITIAN_TOL * max(1.0, np.abs(m).max(initial=0.0)):
            raise SdpError(f"block {k}: coefficient matrix is not Hermitian")
        return m

    def _coeffs(self, c):
        if isinstance(c, Mapping):
            out = [None] * len(self.block_sizes)
            for k, m in c.items():
                out[k] = self._mat(k, m)
            return out
        if len(c) != len(self.block_sizes):
            raise SdpError("constraint must give one matrix (or None) per block")
        return [self._mat(k, m) for k, m in enumerate(c)]

    @property
    def n_constraints(self) -> int:
        return len(self.eq_constraints) + len(self.ineq_constraints)


@dataclass
class SdpSolution:
    blocks: list
    value: float
    dual_value: float
    status: str
    y: np.ndarray | None = None  # multipliers (eq then ineq); ineq ones are >= 0
    residuals: dict = field(default_factory=dict)
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


# ---------------------------------------------------------------------------
# real embedding


def embed(h: np.ndarray) -> np.ndarray:
    """Real symmetric 2n x 2n image of a Hermitian n x n matrix."""
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def unembed(y: np.ndarray) -> np.ndarray:
    n = y.shape[0] // 2
    return 0.5 * (y[:n, :n] + y[n:, n:]) + 0.5j * (y[n:, :n] - y[:n, n:])


class _Data:
    """Internal min-form data: min c.x  s.t.  A x = b,  x in K.

    Blocks of equal (real) size are stacked, so a point is a pair
    ``([X_g of shape (count, n, n) per size group], lp_vector)``.
    """

    def __init__(self, p: SdpProblem):
        self.p = p
        m_eq, m_in = len(p.eq_constraints), len(p.ineq_constraints)
        self.m = m = m_eq + m_in
        rows = p.eq_constraints + p.ineq_constraints
        real_sizes = [2 * n if cplx else n for n, cplx in zip(p.block_sizes, p.complex_blocks)]
        self.sizes = real_sizes
        order = sorted(set(real_sizes))
        self.groups = [[k for k, n in enumerate(real_sizes) if n == size] for size in order]
        self.gsizes = order
        self.where = {}
        for g, ks in enumerate(self.groups):
            for j, k in enumerate(ks):
                self.where[k] = (g, j)
        self.A, self.c = [], []
        for g, ks in enumerate(self.groups):
            N = self.gsizes[g]
            Ag = np.zeros((m, len(ks), N, N))
            cg = np.zeros((len(ks), N, N))
            for j, k in enumerate(ks):
                cg[j] = -self._conv(k, p.objective[k], N)
                for i, (coeffs, _) in enumerate(rows):
                    if coeffs[k] is not None:
                        Ag[i, j] = self._conv(k, coeffs[k], N)
            self.A.append(Ag)
            self.c.append(cg)
        # inequality slacks: one nonnegative variable each
        self.n_lp = m_in
        self.A_lp = np.zeros((m, m_in))
        self.A_lp[m_eq:, :] = np.eye(m_in)
        self.c_lp = np.zeros(m_in)
        self.b = np.array([b for _, b in rows], dtype=float)
        self.Avec = [a.reshape(m, -1) for a in self.A]
        self.nu = sum(real_sizes) + self.n_lp

    def _conv(self, k, mat, N):
        if mat is None:
            return np.zeros((N, N))
        if self.p.complex_blocks[k]:
            return 0.5 * embed(mat)
        return np.real(mat).astype(float)

    def split(self, x) -> list:
        """Per original block matrices of a stacked point."""
        return [x[0][g][j] for g, j in (self.where[k] for k in range(len(self.sizes)))]

    def identity(self):
        return ([np.broadcast_to(np.eye(n), (len(ks), n, n)).copy() for n, ks in zip(self.gsizes, self.groups)], np.ones(self.n_lp))

    def op(self, x):
        out = self.A_lp @ x[1]
        for Av, X in zip(self.Avec, x[0]):
            out = out + Av @ X.ravel()
        return out

    def adj(self, y):
        mats = [(Av.T @ y).reshape(X.shape[1:]) for Av, X in zip(self.Avec, self.A)]
        return (mats, self.A_lp.T @ y)

    def cdot(self, x):
        return _inner((self.c, self.c_lp), x)


def _inner(x, s):
    return sum(float(np.vdot(a, b).real) for a, b in zip(x[0], s[0])) + float(x[1] @ s[1])


def _axpy(a, x, y):
    return ([yy + a * xx for xx, yy in zip(x[0], y[0])], y[1] + a * x[1])


def _norm(x):
    return np.sqrt(_inner(x, x))


def _T(m):
    return np.swapaxes(m, -1, -2)


def _sym(m):
    return 0.5 * (m + _T(m))


class _Scaling:
    """NT scaling per block: x = R diag(lam) R^T, s = R^-T diag(lam) R^-1."""

    def __init__(self, x, s):
        self.R, self.Rinv, self.lam = [], [], []
        for X, S in zip(x[0], s[0]):
            Lx = _factor(X)
            Ls = _factor(S)
            U, lam, Vt = np.linalg.svd(_T(Ls) @ Lx)
            lam = np.maximum(lam, 1e-300)
            r = 1.0 / np.sqrt(lam)
            self.R.append(Lx @ _T(Vt) * r[:, None, :])
            self.Rinv.append((_T(U) @ _T(Ls)) * r[:, :, None])
            self.lam.append(lam)
        self.lp_w = np.sqrt(x[1] / s[1])
        self.lp_lam = np.sqrt(x[1] * s[1])
        self.G = [R @ _T(R) for R in self.R]

    def scale_x(self, dx):
        return [Ri @ D @ _T(Ri) for Ri, D in zip(self.Rinv, dx[0])], dx[1] / self.lp_w

    def scale_s(self, ds):
        return [_T(R) @ D @ R for R, D in zip(self.R, ds[0])], ds[1] * self.lp_w


def _factor(X):
    w, V = np.linalg.eigh(_sym(X))
    return V * np.sqrt(np.maximum(w, 1e-300))[:, None, :]


def _max_step(lam, d) -> float:
    """Largest alpha with diag(lam) + alpha d >= 0 for a stack of scaled directions."""
    r = 1.0 / np.sqrt(lam)
    w = np.linalg.eigvalsh(_sym(d * r[:, :, None] * r[:, None, :]))
    lo = w[:, 0].min() if w.size else 0.0
    return np.inf if lo >= 0 else -1.0 / lo


def _max_step_lp(v, d) -> float:
    neg = d < 0
    return np.min(-v[neg] / d[neg]) if neg.any() else np.inf


def _diag(v):
    """Stack of diagonal matrices from a (count, n) array."""
    n = v.shape[-1]
    return v[..., :, None] * np.eye(n)


def solve_sdp(
    p: SdpProblem,
    tol: float = TARGET_TOL,
    accept_tol: float = ACCEPT_TOL,
    max_iter: int = MAX_ITERATIONS,
) -> SdpSolution:
    """Solve ``p``; see the module docstring for the problem form."""
    d = _Data(p)
    m = d.m
    if m == 0:
        raise SdpError("problem has no constraints")
    b, c = d.b, (d.c, d.c_lp)
    nb = 1.0 + np.linalg.norm(b)
    nc = 1.0 + _norm(c)

    x = d.identity()
    s = d.identity()
    y = np.zeros(m)
    tau = kappa = 1.0
    status = MAX_ITER
    it = 0
    best = None
    for it in range(1, max_iter + 1):
        mu = (_inner(x, s) + tau * kappa) / (d.nu + 1)
        rp = d.op(x) - b * tau
        At_y = d.adj(y)
        rd = _axpy(-tau, c, _axpy(1.0, s, At_y))
        cx, by = d.cdot(x), float(b @ y)
        rg = cx - by + kappa

        # convergence / certificates
        pres = np.linalg.norm(rp) / tau / nb
        dres = _norm(rd) / tau / nc
        gap = abs(cx - by) / tau / (1.0 + abs(cx / tau))
        if pres <= tol and dres <= tol and gap <= tol:
            status = OPTIMAL
            break
        if by > 0 and tau < kappa:
            # primal infeasibility certificate: A^T y + s ~ 0 with b.y > 0
            if _norm(_axpy(1.0, s, At_y)) / by <= tol:
                status = INFEASIBLE
                break
        if cx < 0 and tau < kappa:
            if np.linalg.norm(d.op(x)) / -cx <= tol:
                status = UNBOUNDED
                break
        if pres <= accept_tol and dres <= accept_tol and gap <= accept_tol:
            best = (x, y, s, tau)

        sc = _Scaling(x, s)
        G = sc.G
        lpw2 = sc.lp_w ** 2
        # Schur complement M_ij = <A_i, G A_j G> (+ LP part)
        M = np.zeros((m, m))
        for Ag, Gg, Av in zip(d.A, G, d.Avec):
            T = Gg[None] @ Ag @ Gg[None]
            M += Av @ T.reshape(m, -1).T
        if d.n_lp:
            M += (d.A_lp * lpw2) @ d.A_lp.T
        M = 0.5 * (M + M.T)
        Mfac = _chol(M)

        def apply_G(v):
            return ([Gg @ V @ Gg for Gg, V in zip(G, v[0])], v[1] * lpw2)

        Gc = apply_G(c)
        g = d.op(Gc)
        cGc = _inner(c, Gc)
        v = _solve(Mfac, M, g + b)
        GrdG = apply_G(rd)
        A_GrdG = d.op(GrdG)
        c_GrdG = _inner(c, GrdG)

        def direction(eta, Rc, Rtau):
            # dx + G ds G = Rc;  kappa dtau + tau dkappa = Rtau
            r1 = -eta * rp - d.op(Rc) - eta * A_GrdG
            r2 = -eta * rg - _inner(c, Rc) - eta * c_GrdG - Rtau / tau
            u = _solve(Mfac, M, r1)
            den = (g - b) @ v - cGc - kappa / tau
            dtau = (r2 - (g - b) @ u) / den
            dy = u + v * dtau
            ds = _axpy(dtau, c, _axpy(-1.0, d.adj(dy), ([-eta * R for R in rd[0]], -eta * rd[1])))
            dx = _axpy(-1.0, apply_G(ds), Rc)
            dkappa = (Rtau - kappa * dtau) / tau
            return dx, dy, ds, dtau, dkappa

        def comp_rhs(target):
            """Rc from the scaled complementarity rhs r: lam o q = r, Rc = R q R^T."""
            mats = []
            for R, lam, r in zip(sc.R, sc.lam, target[0]):
                q = 2.0 * r / (lam[:, :, None] + lam[:, None, :])
                mats.append(R @ q @ _T(R))
            return (mats, target[1] / sc.lp_lam * sc.lp_w)

        def step_len(dx, ds, dtau, dkappa):
            sx, ss = sc.scale_x(dx), sc.scale_s(ds)
            a = np.inf
            for lam, a1, a2 in zip(sc.lam, sx[0], ss[0]):
                a = min(a, _max_step(lam, a1), _max_step(lam, a2))
            if d.n_lp:
                a = min(a, _max_step_lp(sc.lp_lam, sx[1]), _max_step_lp(sc.lp_lam, ss[1]))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkappa < 0:
                a = min(a, -kappa / dkappa)
            return a, sx, ss

        # predictor
        lam2 = ([-_diag(lam * lam) for lam in sc.lam], -sc.lp_lam ** 2)
        dxa, dya, dsa, dta, dka = direction(1.0, comp_rhs(lam2), -tau * kappa)
        aa, sxa, ssa = step_len(dxa, dsa, dta, dka)
        aa = min(1.0, aa)
        sigma = (1.0 - aa) ** 3
        # corrector
        target = (
            [_diag(sigma * mu - lam * lam) - _sym(a1 @ a2) for lam, a1, a2 in zip(sc.lam, sxa[0], ssa[0])],
            sigma * mu - sc.lp_lam ** 2 - sxa[1] * ssa[1],
        )
        dx, dy, ds, dt, dk = direction(1.0 - sigma, comp_rhs(target), sigma * mu - tau * kappa - dta * dka)
        a, _, _ = step_len(dx, ds, dt, dk)
        a = min(1.0, 0.98 * a)
        x = _axpy(a, dx, x)
        s = _axpy(a, ds, s)
        x = ([_sym(X) for X in x[0]], x[1])
        s = ([_sym(S) for S in s[0]], s[1])
        y = y + a * dy
        tau += a * dt
        kappa += a * dk
        if not (np.isfinite(tau) and tau > 0 and kappa > 0):
            break
        if a < 1e-12:
            log.debug("sdp: step length collapsed at iteration %d", it)
            break

    if status == MAX_ITER and best is not None:
        x, y, s, tau = best
        status = OPTIMAL
    return _finish(p, d, x, y, s, tau, status, it, accept_tol)


def _chol(M):
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return None


def _solve(L, M, r):
    if L is not None:
        z = np.linalg.solve(L, r)
        return np.linalg.solve(L.T, z)
    return np.linalg.lstsq(M, r, rcond=None)[0]


def _finish(p: SdpProblem, d: _Data, x, y, s, tau, status, it, accept_tol) -> SdpSolution:
    m_eq = len(p.eq_constraints)
    if status in (INFEASIBLE, UNBOUNDED):
        val = -np.inf if status == INFEASIBLE else np.inf
        return SdpSolution([], val, val, status, None, {}, it)
    X = [Xk / tau for Xk in d.split(x)]
    blocks = [unembed(Xk) if cplx else Xk for Xk, cplx in zip(X, p.complex_blocks)]
    yu = -y / tau
    res = verify(p, blocks, yu)
    sol = SdpSolution(blocks, res["value"], res["dual_value"], status, yu, res, it)
    if status == OPTIMAL:
        scale_b = 1.0 + np.abs(d.b).max(initial=0.0)
        ok = (
            res["primal"] <= accept_tol * scale_b
            and res["gap"] <= accept_tol * (1.0 + abs(res["value"]))
            and res["min_eig"] >= -1e-8
            and res["dual_min_eig"] >= -accept_tol * (1.0 + _cmax(p))
        )
        if not ok:
            log.debug("sdp: rejected solution after recomputation %s", res)
            sol.status = MAX_ITER
    return sol


def _cmax(p: SdpProblem) -> float:
    return max((float(np.abs(C).max()) for C in p.objective if C is not None), default=0.0)


def verify(p: SdpProblem, blocks, y=None) -> dict:
    """Residuals of a candidate solution, recomputed from the problem data."""
    value = sum(np.vdot(C, X).real for C, X in zip(p.objective, blocks) if C is not None)

    def lhs(coeffs):
        return sum(np.vdot(A, X).real for A, X in zip(coeffs, blocks) if A is not None)

    eq = [lhs(cf) - b for cf, b in p.eq_constraints]
    ineq = [max(0.0, lhs(cf) - b) for cf, b in p.ineq_constraints]
    primal = max([abs(r) for r in eq] + ineq, default=0.0)
    min_eig = min((np.linalg.eigvalsh(_sym(X) if not np.iscomplexobj(X) else 0.5 * (X + X.conj().T))[0] for X in blocks), default=0.0)
    out = {"value": float(value), "primal": float(primal), "min_eig": float(min_eig)}
    if y is not None:
        rows = p.eq_constraints + p.ineq_constraints
        bvec = np.array([b for _, b in rows])
        dual_value = float(bvec @ y)
        # dual slack S_k = sum_i y_i A_ik - C_k must be PSD
        dual_min = np.inf
        for k, n in enumerate(p.block_sizes):
            S = -p.objective[k] if p.objective[k] is not None else np.zeros((n, n))
            S = np.array(S, dtype=complex) if p.complex_blocks[k] else np.real(S).astype(float)
            for yi, (cf, _) in zip(y, rows):
                if cf[k] is not None:
                    S = S + yi * cf[k]
            S = 0.5 * (S + S.conj().T)
            dual_min = min(dual_min, np.linalg.eigvalsh(S)[0])
        m_in = len(p.ineq_constraints)
        if m_in:
            dual_min = min(dual_min, float(np.min(y[-m_in:])))
        out.update(dual_value=dual_value, dual_min_eig=float(dual_min), gap=abs(dual_value - value))
    return out


# ---------------------------------------------------------------------------
# LMI helper


@dataclass
class LmiSolution:
    value: float
    y: np.ndarray
    status: str
    matrices: list  # F(y) per block
    sdp: SdpSolution


def solve_lmi(f, F0: Sequence, Fs: Sequence[Sequence], ineqs=(), **kw) -> LmiSolution:
    """maximize f.y  s.t.  F0_k + sum_i y_i Fs[i][k] >= 0 for every block k,
    and ``g.y <= h`` for each ``(g, h)`` in ``ineqs``.

    Solved as the dual of the primal block SDP with ``A_i = Fs[i]`` (plus a
    1x1 block per inequality).
    """
    f = np.asarray(f, dtype=float)
    nvar = len(f)
    sizes = [np.asarray(F).shape[0] for F in F0]
    ineqs = list(ineqs)
    nb = len(sizes)
    block_sizes = sizes + [1] * len(ineqs)
    objective = [-np.asarray(F) for F in F0] + [np.array([[-float(h)]]) for _, h in ineqs]
    cons = []
    for i in range(nvar):
        coeffs = {k: np.asarray(Fs[i][k]) for k in range(nb) if Fs[i][k] is not None}
        for j, (g, _) in enumerate(ineqs):
            if g[i] != 0:
                coeffs[nb + j] = np.array([[-float(g[i])]])
        cons.append((coeffs, -f[i]))
    sol = solve_sdp(SdpProblem(block_sizes, objective, cons), **kw)
    if sol.status in (INFEASIBLE, UNBOUNDED):
        # primal infeasible <-> LMI unbounded, and vice versa
        st = UNBOUNDED if sol.status == INFEASIBLE else INFEASIBLE
        return LmiSolution(np.inf if st == UNBOUNDED else -np.inf, np.full(nvar, np.nan), st, [], sol)
    yv = np.asarray(sol.y)
    mats = []
    for k in range(nb):
        Fk = np.array(F0[k], dtype=complex if any(np.iscomplexobj(Fs[i][k]) for i in range(nvar)) else float)
        for i in range(nvar):
            if Fs[i][k] is not None:
                Fk = Fk + yv[i] * np.asarray(Fs[i][k])
        mats.append(Fk)
    return LmiSolution(-sol.value if sol.status == OPTIMAL else float(f @ yv), yv, sol.status, mats, sol)


# ---------------------------------------------------------------------------
# SDPA sparse dump


def to_sdpa(p: SdpProblem) -> str:
    """SDPA sparse text for ``min b.y s.t. sum y_i A_i - C >= 0`` (the dual of ``p``).

    Complex blocks are written through their real embedding; inequality
    constraints get a diagonal block entry each.
    """
    d = _Data(p)
    lines = [f"{d.m}", f"{len(d.sizes) + (1 if d.n_lp else 0)}"]
    lines.append(" ".join(str(n) for n in d.sizes) + (f" {-d.n_lp}" if d.n_lp else ""))
    lines.append(" ".join(repr(float(v)) for v in d.b))

    def entries(i, mats, lp):
        for k, Mk in enumerate(mats):
            r, cidx = np.nonzero(np.triu(Mk))
            for a, bcol in zip(r, cidx):
                lines.append(f"{i} {k + 1} {a + 1} {bcol + 1} {Mk[a, bcol]!r}")
        if d.n_lp:
            for j in np.nonzero(lp)[0]:
                lines.append(f"{i} {len(mats) + 1} {j + 1} {j + 1} {lp[j]!r}")

    # F0 = -c (the max objective), Fi = A_i
    entries(0, [-c for c in d.split((d.c,))], -d.c_lp)
    for i in range(d.m):
        entries(i + 1, d.split(([A[i] for A in d.A],)), d.A_lp[i])
    return "\n".join(lines) + "\n"
