"""Moment-matrix upper bounds for two-sender prepare-and-measure scenarios.

Operators are words in the letters

    rho_x  (Alice state, idempotent)      sigma_y (Bob state, idempotent)
    M_z    (joint projector)              Theta / Phi (Alice / Bob auxiliary)

under the trace.  Alice and Bob letters commute, ``M_z M_z' = delta M_z``,
and words are identified up to cyclic rotation and reversal (the moment
matrix is taken real).  Entry ``Gamma[u, v] = Tr[u v^dagger]``.

Two variants are built:

``paper``
    ``p(z|x,y) = Tr[rho_x sigma_y M_z] >= 0`` with the completeness sums;
    dimension scenarios fix ``Tr[I] = d^2``, ``Tr[rho_x] = Tr[sigma_y] = d``;
    distinguishability scenarios add the scalar constraints
    ``Gamma[Theta] >= Gamma[rho_x]`` and ``Gamma[Theta] / n_x <= D1``
    (and the same for ``Phi``).  The trace bound counts ``Tr[Theta (x) I]``
    as if the other sender's identity had unit trace, so it is only sound
    when that trace is 1.
``extended``
    replaces the scalar Theta/Phi constraints by localizing matrices of
    ``Theta - rho_x`` (and ``Phi - sigma_y``) on the basis ``{I, M_z}``,
    with the trace bound written against the shared identity trace.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import sdp
from .model import Functional, QuantumStrategy, Scenario, ValidationError

log = logging.getLogger(__name__)

# letter kinds, ordered for the lexicographic canonical form
RHO, SIGMA, MEAS, THETA, PHI = range(5)
_NAMES = {RHO: "r", SIGMA: "s", MEAS: "M", THETA: "T", PHI: "P"}
ALICE, BOB, JOINT = "Alice", "Bob", "Joint"
IDEMPOTENT = {RHO, SIGMA, MEAS}

VARIANTS = ("paper", "extended")


@dataclass(frozen=True, order=True)
class Letter:
    kind: int
    index: int = 0

    @property
    def side(self) -> str:
        if self.kind in (RHO, THETA):
            return ALICE
        if self.kind in (SIGMA, PHI):
            return BOB
        return JOINT

    def __str__(self):
        if self.kind in (THETA, PHI):
            return _NAMES[self.kind]
        return f"{_NAMES[self.kind]}{self.index + 1}"


def rho(x):
    return Letter(RHO, x)


def sigma(y):
    return Letter(SIGMA, y)


def meas(z):
    return Letter(MEAS, z)


THETA_L = Letter(THETA)
PHI_L = Letter(PHI)

Word = tuple  # tuple of Letter; () is the identity
ZERO = None


def word_str(w) -> str:
    if w is ZERO:
        return "0"
    return "I" if not w else "".join(str(a) for a in w)


def _reduce_once(w):
    """All words reachable by one reduction; None marks the zero word."""
    out = []
    for i in range(len(w) - 1):
        a, b = w[i], w[i + 1]
        if a.kind == MEAS and b.kind == MEAS and a.index != b.index:
            return None
        if a == b and a.kind in IDEMPOTENT:
            out.append(w[:i] + w[i + 1:])
    return out


def _moves(w):
    n = len(w)
    yield tuple(reversed(w))
    for k in range(1, n):
        yield w[k:] + w[:k]
    for i in range(n - 1):
        a, b = w[i], w[i + 1]
        if {a.side, b.side} == {ALICE, BOB}:
            yield w[:i] + (b, a) + w[i + 2:]


@lru_cache(maxsize=None)
def _canonical(w: tuple):
    seen = {w}
    queue = deque([w])
    best = w
    while queue:
        cur = queue.popleft()
        red = _reduce_once(cur)
        if red is None:
            return ZERO
        # cyclic adjacency of the last and first letters is covered by rotations
        for nxt in list(_moves(cur)) + red:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
                if (len(nxt), nxt) < (len(best), best):
                    best = nxt
    return best


def canonicalize_word(w) -> tuple | None:
    """Canonical representative of ``Tr[w]``; ``None`` for the zero word."""
    return _canonical(tuple(w))


def adjoint(w):
    return tuple(reversed(w))


# ---------------------------------------------------------------------------
# structure


@dataclass
class MomentStructure:
    scenario: Scenario
    variant: str
    monomials: list  # list of words
    classes: list  # canonical words with a free variable, in order
    entry: np.ndarray  # (n, n) object array of canonical words (or ZERO)
    known: dict  # canonical word -> value
    alias: dict  # canonical word -> representative word sharing its variable
    equalities: list = field(default_factory=list)  # ({word: coeff}, rhs)
    inequalities: list = field(default_factory=list)  # ({word: coeff}, rhs): sum <= rhs
    localizing: list = field(default_factory=list)  # list of (label, entry array of {word: coeff})

    @property
    def size(self) -> int:
        return len(self.monomials)

    def labels(self) -> list[str]:
        return [word_str(m) for m in self.monomials]

    def prob_word(self, x, y, z):
        return canonicalize_word((rho(x), sigma(y), meas(z)))


def monomial_list(s: Scenario) -> list:
    nx, ny, nz = s.shape
    mons = [()]
    if not s.is_dimension_bounded:
        mons += [(THETA_L,), (PHI_L,)]
    mons += [(rho(x),) for x in range(nx)]
    mons += [(sigma(y),) for y in range(ny)]
    mons += [(meas(z),) for z in range(nz)]
    mons += [(rho(x), meas(z)) for x in range(nx) for z in range(nz)]
    mons += [(sigma(y), meas(z)) for y in range(ny) for z in range(nz)]
    return mons


def build_moment_structure(s: Scenario, variant: str = "paper", dimension: int | None = None) -> MomentStructure:
    """Moment structure of ``s``.

    ``dimension`` adds the dimension traces to a distinguishability scenario
    (both constraint types at once).
    """
    if variant not in VARIANTS:
        raise ValidationError(f"unknown hierarchy variant {variant!r}; expected one of {VARIANTS}")
    nx, ny, nz = s.shape
    mons = monomial_list(s)
    n = len(mons)
    entry = np.empty((n, n), dtype=object)
    classes: dict = {}
    for i, u in enumerate(mons):
        for j, v in enumerate(mons):
            w = canonicalize_word(u + adjoint(v))
            entry[i, j] = w
            if w is not ZERO and w not in classes:
                classes[w] = len(classes)

    def cw(*letters):
        return canonicalize_word(tuple(letters))

    known: dict = {}
    alias: dict = {}
    eqs: list = []
    ineqs: list = []
    for x in range(nx):
        for y in range(ny):
            known[cw(rho(x), sigma(y))] = 1.0
    d = s.constraint.d if s.is_dimension_bounded else dimension
    if d is not None:
        known[()] = float(d * d)
        for x in range(nx):
            known[cw(rho(x))] = float(d)
        for y in range(ny):
            known[cw(sigma(y))] = float(d)
    if not s.is_dimension_bounded:
        # every Tr[rho_x (x) I] is the same unknown (the other side's dimension)
        for x in range(1, nx):
            alias[cw(rho(x))] = cw(rho(0))
        for y in range(1, ny):
            alias[cw(sigma(y))] = cw(sigma(0))
    # completeness: sum_z M_z = I inside the three row families
    for x in range(nx):
        for y in range(ny):
            eqs.append(_lin({cw(rho(x), sigma(y), meas(z)): 1 for z in range(nz)}, {cw(rho(x), sigma(y)): -1}))
    for x in range(nx):
        eqs.append(_lin({cw(rho(x), meas(z)): 1 for z in range(nz)}, {cw(rho(x)): -1}))
    for y in range(ny):
        eqs.append(_lin({cw(sigma(y), meas(z)): 1 for z in range(nz)}, {cw(sigma(y)): -1}))

    # p(z|x,y) are probabilities
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                ineqs.append(({cw(rho(x), sigma(y), meas(z)): -1.0}, 0.0))

    loc = []
    if not s.is_dimension_bounded:
        c = s.constraint
        D1, D2 = float(c.D1), float(c.D2)
        th, ph = cw(THETA_L), cw(PHI_L)
        if variant == "paper":
            for x in range(nx):
                ineqs.append(({cw(rho(x)): 1.0, th: -1.0}, 0.0))
            for y in range(ny):
                ineqs.append(({cw(sigma(y)): 1.0, ph: -1.0}, 0.0))
            ineqs.append(({th: 1.0 / nx}, D1))
            ineqs.append(({ph: 1.0 / ny}, D2))
        else:
            basis = [()] + [(meas(z),) for z in range(nz)]
            for x in range(nx):
                loc.append((f"T-r{x + 1}", _localizing(basis, THETA_L, rho(x))))
            for y in range(ny):
                loc.append((f"P-s{y + 1}", _localizing(basis, PHI_L, sigma(y))))
            # Tr[Theta (x) I] <= n_x D1 Tr[rho_1 (x) I]
            ineqs.append(({th: 1.0, cw(rho(0)): -nx * D1}, 0.0))
            ineqs.append(({ph: 1.0, cw(sigma(0)): -ny * D2}, 0.0))
        for _, arr in loc:
            for terms in arr.ravel():
                for w in terms:
                    if w not in classes:
                        classes[w] = len(classes)

    return MomentStructure(s, variant, mons, list(classes), entry, known, alias, eqs, ineqs, loc)


def _lin(*parts):
    out: dict = {}
    for p in parts:
        for w, c in p.items():
            if w is ZERO:
                continue
            out[w] = out.get(w, 0.0) + c
    return out, 0.0


def _localizing(basis, big, small) -> np.ndarray:
    """Entries Tr[u (big - small) v^dagger] as {word: coeff} maps."""
    n = len(basis)
    arr = np.empty((n, n), dtype=object)
    for i, u in enumerate(basis):
        for j, v in enumerate(basis):
            terms: dict = {}
            for letter, coeff in ((big, 1.0), (small, -1.0)):
                w = canonicalize_word(u + (letter,) + adjoint(v))
                if w is not ZERO:
                    terms[w] = terms.get(w, 0.0) + coeff
            arr[i, j] = terms
    return arr


# ---------------------------------------------------------------------------
# solving


@dataclass
class HierarchyResult:
    value: float
    moment_matrix: np.ndarray
    status: str
    structure: MomentStructure
    values: dict  # canonical word -> solved value

    def probabilities(self) -> np.ndarray:
        nx, ny, nz = self.structure.scenario.shape
        p = np.zeros((nz, nx, ny))
        for z in range(nz):
            for x in range(nx):
                for y in range(ny):
                    p[z, x, y] = self.values.get(self.structure.prob_word(x, y, z), 0.0)
        return p


class HierarchyError(RuntimeError):
    pass


def _variables(st: MomentStructure):
    """Index of the free variable carrying each unknown class."""
    var: dict = {}
    for w in st.classes:
        if w in st.known:
            continue
        rep = st.alias.get(w, w)
        if rep in st.known:
            continue
        if rep not in var:
            var[rep] = len(var)
        var[w] = var[rep]
    return var


def _affine(terms: dict, var: dict, known: dict, nvar: int):
    """Linear form ``sum coeff * word`` as (constant, coefficient vector)."""
    const = 0.0
    vec = np.zeros(nvar)
    for w, c in terms.items():
        if w is ZERO:
            continue
        if w in known:
            const += c * known[w]
        else:
            vec[var[w]] += c
    return const, vec


def hierarchy_upper_bound(
    s: Scenario,
    f: Functional,
    variant: str = "paper",
    structure: MomentStructure | None = None,
    dimension: int | None = None,
    **solver_kw,
) -> HierarchyResult:
    """Upper bound on ``sum c p`` over the modeled quantum set."""
    f.check(s)
    st = structure or build_moment_structure(s, variant, dimension)
    known = {w: v for w, v in st.known.items()}
    for w, rep in st.alias.items():
        if rep in known:
            known[w] = known[rep]
    var = _variables(st)
    nvar = max(var.values(), default=-1) + 1

    # objective
    c = np.asarray(f.coeffs, dtype=float)
    nx, ny, nz = s.shape
    obj_terms: dict = {}
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                if c[x, y, z] != 0:
                    w = st.prob_word(x, y, z)
                    obj_terms[w] = obj_terms.get(w, 0.0) + c[x, y, z]
    obj_const, obj = _affine(obj_terms, var, known, nvar)

    # equalities E y = e  ->  y = y0 + N t
    E, e = [], []
    for terms, rhs in st.equalities:
        k, v = _affine(terms, var, known, nvar)
        if np.any(v):
            E.append(v)
            e.append(rhs - k)
        elif abs(rhs - k) > 1e-12:
            raise HierarchyError(f"inconsistent fixed equality {terms}")
    if E:
        E = np.array(E)
        e = np.array(e)
        y0 = np.linalg.lstsq(E, e, rcond=None)[0]
        if np.abs(E @ y0 - e).max() > 1e-9:
            raise HierarchyError("equality constraints are inconsistent")
        _, sv, Vt = np.linalg.svd(E)
        r = int((sv > 1e-10 * max(1.0, sv[0])).sum())
        N = Vt[r:].T
    else:
        y0 = np.zeros(nvar)
        N = np.eye(nvar)
    nfree = N.shape[1]

    def lmi_block(entries_fn, size):
        F0 = np.zeros((size, size))
        Fs = np.zeros((nvar, size, size))
        for i in range(size):
            for j in range(size):
                k, v = entries_fn(i, j)
                F0[i, j] = k
                Fs[:, i, j] = v
        F0 = F0 + np.einsum("k,kij->ij", y0, Fs)
        Ft = np.einsum("kt,kij->tij", N, Fs)
        return F0, Ft

    def gamma_entry(i, j):
        w = st.entry[i, j]
        return _affine({} if w is ZERO else {w: 1.0}, var, known, nvar)

    blocks = [lmi_block(gamma_entry, st.size)]
    for _, arr in st.localizing:
        blocks.append(lmi_block(lambda i, j, arr=arr: _affine(arr[i, j], var, known, nvar), arr.shape[0]))

    ineqs = []
    for terms, rhs in st.inequalities:
        k, v = _affine(terms, var, known, nvar)
        g = N.T @ v
        h = rhs - k - v @ y0
        if np.any(np.abs(g) > 1e-14):
            ineqs.append((g, h))
        elif h < -1e-12:
            raise HierarchyError("fixed inequality violated")

    fobj = N.T @ obj
    F0s = [b[0] for b in blocks]
    Fts = [[b[1][t] for b in blocks] for t in range(nfree)]
    sol = sdp.solve_lmi(fobj, F0s, Fts, ineqs, **solver_kw)
    if sol.status != sdp.OPTIMAL:
        raise HierarchyError(f"SDP finished with status {sol.status}")
    yv = y0 + N @ sol.y
    values = dict(known)
    for w, k in var.items():
        values[w] = float(yv[k])
    value = obj_const + obj @ y0 + sol.value
    return HierarchyResult(float(value), sol.matrices[0], sol.status, st, values)


# ---------------------------------------------------------------------------
# strategy moments (soundness checks)


def _operators(st: MomentStructure, strat: QuantumStrategy, theta=None, phi=None) -> dict:
    da, db = strat.dims
    Ia, Ib = np.eye(da), np.eye(db)
    ops = {}
    for x, r in enumerate(strat.alice_states):
        ops[rho(x)] = np.kron(r, Ib)
    for y, r in enumerate(strat.bob_states):
        ops[sigma(y)] = np.kron(Ia, r)
    for z, m in enumerate(strat.povm):
        ops[meas(z)] = np.asarray(m)
    if theta is not None:
        ops[THETA_L] = np.kron(theta, Ib)
    if phi is not None:
        ops[PHI_L] = np.kron(Ia, phi)
    return ops


def word_trace(w, ops: dict, dim: int) -> complex:
    m = np.eye(dim, dtype=complex)
    for a in w:
        m = m @ ops[a]
    return np.trace(m)


def moment_matrix_from_strategy(st: MomentStructure, strat: QuantumStrategy, theta=None, phi=None) -> np.ndarray:
    """``Gamma[u, v] = Re Tr[u v^dagger]`` for an explicit strategy."""
    ops = _operators(st, strat, theta, phi)
    da, db = strat.dims
    mats = {}
    for u in st.monomials:
        m = np.eye(da * db, dtype=complex)
        for a in u:
            m = m @ ops[a]
        mats[u] = m
    n = st.size
    G = np.zeros((n, n))
    for i, u in enumerate(st.monomials):
        for j, v in enumerate(st.monomials):
            G[i, j] = np.trace(mats[u] @ mats[v].conj().T).real
    return G


def constraint_residuals(st: MomentStructure, strat: QuantumStrategy, theta=None, phi=None) -> dict:
    """Violations of the imposed structure by an explicit strategy.

    Returns the largest deviation between equal-class entries, known values,
    aliases and linear equalities, the largest inequality excess and the
    smallest eigenvalue over the PSD blocks.
    """
    ops = _operators(st, strat, theta, phi)
    dim = int(np.prod(strat.dims))
    G = moment_matrix_from_strategy(st, strat, theta, phi)
    val: dict = {}

    def tr(w):
        if w is ZERO:
            return 0.0
        if w not in val:
            val[w] = word_trace(w, ops, dim).real
        return val[w]

    eq = 0.0
    n = st.size
    for i in range(n):
        for j in range(n):
            eq = max(eq, abs(G[i, j] - tr(st.entry[i, j])))
    for w, v in st.known.items():
        eq = max(eq, abs(tr(w) - v))
    for w, rep in st.alias.items():
        eq = max(eq, abs(tr(w) - tr(rep)))
    for terms, rhs in st.equalities:
        eq = max(eq, abs(sum(c * tr(w) for w, c in terms.items()) - rhs))
    ineq = max((sum(c * tr(w) for w, c in terms.items()) - rhs for terms, rhs in st.inequalities), default=-np.inf)
    mins = [np.linalg.eigvalsh(G)[0]]
    for _, arr in st.localizing:
        L = np.array([[sum(c * tr(w) for w, c in arr[i, j].items()) for j in range(arr.shape[1])] for i in range(arr.shape[0])])
        mins.append(np.linalg.eigvalsh(0.5 * (L + L.T))[0])
    return {"equality": eq, "inequality": ineq, "min_eig": float(min(mins)), "gamma": G}


def dump_moment_matrix(st: MomentStructure, G: np.ndarray | None = None, precision: int = 6) -> str:
    """Labeled text table; class words when ``G`` is None, numbers otherwise."""
    labels = st.labels()
    if G is None:
        cells = [[word_str(st.entry[i, j]) for j in range(st.size)] for i in range(st.size)]
    else:
        cells = [[f"{G[i, j]:.{precision}f}" for j in range(st.size)] for i in range(st.size)]
    width = max(max(len(c) for row in cells for c in row), max(len(l) for l in labels))
    head = " " * width + " " + " ".join(l.rjust(width) for l in labels)
    rows = [head] + [labels[i].rjust(width) + " " + " ".join(c.rjust(width) for c in cells[i]) for i in range(st.size)]
    return "\n".join(rows) + "\n"
