"""Classical strategies: vertex enumeration, exact bounds and facet checks.

Dimension-bounded senders use two messages each; distinguishability-bounded
senders with ``n`` inputs use ``2**(n-1)`` messages.  The decoder is never
enumerated when computing bounds: for fixed encoders the objective is
linear in ``p_d(z|m,n)`` with one independent block per message pair, so
the best decoder picks ``argmax_z`` per pair (smallest ``z`` on ties).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import polytope
from .model import (
    Behavior,
    DistinguishabilityBound,
    Functional,
    Scenario,
    ValidationError,
    evaluate_functional,
    rhs_value,
)

FACET_ENUM_MAX_VERTICES = 10_000
FACET_ENUM_MAX_DIM = 12


class CapacityError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ClassicalVertex:
    behavior: Behavior
    encoder_a: np.ndarray  # p(m|x), rows x
    encoder_b: np.ndarray
    decoder: tuple  # decoder[m][n] = z

    def coords(self) -> tuple:
        return behavior_coords(self.behavior.p)


@dataclass
class VertexSet:
    raw_count: int
    vertices: list  # ClassicalVertex, one per strategy
    behaviors: list  # deduplicated reduced-coordinate tuples


def behavior_coords(p) -> tuple:
    """Reduced coordinates ``p[z, x, y]`` for ``z < nz-1`` (flattened z, x, y)."""
    p = np.asarray(p)
    return tuple(Fraction(v) for v in p[:-1].ravel().tolist())


def functional_row(f: Functional, D1=0, D2=0) -> tuple[Fraction, tuple]:
    """``(b, a)`` with ``a . coords <= b`` equivalent to ``f <= rhs`` on normalized behaviors."""
    red, shift = f.reduced()
    a = tuple(Fraction(v) for v in np.transpose(red, (2, 0, 1)).ravel().tolist())
    return Fraction(rhs_value(f, Fraction(D1), Fraction(D2))) - shift, a


def behavior_from_coords(coords, shape) -> np.ndarray:
    nx, ny, nz = shape
    head = np.array(coords, dtype=object).reshape(nz - 1, nx, ny)
    last = 1 - head.sum(axis=0)
    return np.concatenate([head, last[None]], axis=0)


def deterministic_encoders(n_inputs: int, n_messages: int) -> np.ndarray:
    """All deterministic encoders as 0/1 arrays ``(K, n_inputs, n_messages)``."""
    out = np.zeros((n_messages**n_inputs, n_inputs, n_messages), dtype=np.int64)
    for k, msgs in enumerate(itertools.product(range(n_messages), repeat=n_inputs)):
        out[k, np.arange(n_inputs), msgs] = 1
    return out


def product_behavior(ea, eb, decoder, nz) -> np.ndarray:
    """p[z, x, y] = sum_{m,n} ea[x,m] eb[y,n] [decoder[m][n] == z]."""
    ea = np.asarray(ea, dtype=object)
    eb = np.asarray(eb, dtype=object)
    nx, nm = ea.shape
    ny, nn = eb.shape
    p = np.zeros((nz, nx, ny), dtype=object)
    p[...] = Fraction(0)
    for m in range(nm):
        for n in range(nn):
            p[decoder[m][n]] += np.outer(ea[:, m], eb[:, n])
    return p


def enum_vertices_dim(s: Scenario) -> VertexSet:
    """Every (encoder A, encoder B, decoder) deterministic strategy with binary messages."""
    if not s.is_dimension_bounded:
        raise ValidationError("enum_vertices_dim needs a dimension-bounded scenario")
    nx, ny, nz = s.shape
    EA = deterministic_encoders(nx, 2)
    EB = deterministic_encoders(ny, 2)
    decoders = list(itertools.product(range(nz), repeat=4))
    verts = []
    seen = {}
    for ea in EA:
        for eb in EB:
            outer = np.einsum("xm,yn->mnxy", ea, eb)
            for dec in decoders:
                p = np.zeros((nz, nx, ny), dtype=np.int64)
                for k, z in enumerate(dec):
                    p[z] += outer[k // 2, k % 2]
                dtab = ((dec[0], dec[1]), (dec[2], dec[3]))
                v = ClassicalVertex(Behavior(p), ea, eb, dtab)
                verts.append(v)
                key = tuple(p[:-1].ravel().tolist())
                seen.setdefault(key, None)
    behaviors = [tuple(Fraction(x) for x in k) for k in seen]
    return VertexSet(len(verts), verts, behaviors)


def raw_vertex_count_dim(s: Scenario) -> int:
    nx, ny, nz = s.shape
    return 2**nx * 2**ny * nz**4


@lru_cache(maxsize=None)
def _dim_behaviors(shape) -> tuple:
    return tuple(enum_vertices_dim(Scenario(*shape)).behaviors)


# ---------------------------------------------------------------------------
# distinguishability-bounded encoders


def n_messages_dist(n_inputs: int) -> int:
    return 2 ** (n_inputs - 1)


def distinguishability(encoder) -> Fraction:
    """``sum_m max_x q_x p(m|x)`` with uniform priors, exactly."""
    e = np.asarray(encoder, dtype=object)
    n = e.shape[0]
    return sum((max(Fraction(v) for v in e[:, m]) for m in range(e.shape[1])), Fraction(0)) / n


@lru_cache(maxsize=None)
def _encoder_vertices(n_inputs: int, D: Fraction) -> tuple:
    nm = n_messages_dist(n_inputs)
    q = Fraction(1, n_inputs)
    nvar = n_inputs * nm + nm  # p(m|x) row-major, then t_m

    def pv(x, m):
        return x * nm + m

    ineqs, eqs = [], []
    for x in range(n_inputs):
        for m in range(nm):
            a = [0] * nvar
            a[pv(x, m)] = -1
            ineqs.append((0, a))  # p >= 0
            a = [Fraction(0)] * nvar
            a[pv(x, m)] = q
            a[n_inputs * nm + m] = Fraction(-1)
            ineqs.append((0, a))  # q p(m|x) <= t_m
        a = [0] * nvar
        for m in range(nm):
            a[pv(x, m)] = 1
        eqs.append((1, a))
    a = [0] * nvar
    for m in range(nm):
        a[n_inputs * nm + m] = 1
    ineqs.append((D, a))
    lifted = polytope.facets_to_vertices(polytope.HPolytope(ineqs, eqs, nvar))
    projected = sorted(set(v[: n_inputs * nm] for v in lifted.vertices))
    extreme = polytope.extreme_points(projected)
    return tuple(extreme)


def enum_encoder_vertices_dist(n_inputs: int, D) -> list[np.ndarray]:
    """Vertices of the encoder polytope ``{p(m|x) : sum_m max_x p(m|x)/n <= D}``.

    Computed by lifting with ``t_m >= p(m|x)/n``, enumerating the lifted
    vertices, projecting ``t`` away and keeping the extreme points.
    """
    D = Fraction(D)
    if not (Fraction(1, n_inputs) <= D <= 1):
        raise ValidationError(f"D={D} outside [1/{n_inputs}, 1]")
    nm = n_messages_dist(n_inputs)
    out = []
    for v in _encoder_vertices(n_inputs, D):
        e = np.empty((n_inputs, nm), dtype=object)
        e[...] = np.array(v, dtype=object).reshape(n_inputs, nm)
        out.append(e)
    return out


# ---------------------------------------------------------------------------
# bounds


def _encoders_for(s: Scenario):
    if s.is_dimension_bounded:
        ea = deterministic_encoders(s.nx, 2).astype(object)
        eb = deterministic_encoders(s.ny, 2).astype(object)
        return list(ea), list(eb)
    c = s.constraint
    return enum_encoder_vertices_dist(s.nx, c.D1), enum_encoder_vertices_dist(s.ny, c.D2)


def _scaled(encoders) -> tuple[np.ndarray, int]:
    """Stack rational encoders as integers times a common scale."""
    L = 1
    for e in encoders:
        for v in e.ravel():
            L = math.lcm(L, Fraction(v).denominator)
    arr = np.array([[[int(Fraction(v) * L) for v in row] for row in e] for e in encoders], dtype=np.int64)
    return arr, L


def _coeffs_int(f: Functional) -> tuple[np.ndarray, int]:
    L = 1
    for v in f.coeffs.ravel():
        L = math.lcm(L, Fraction(v).denominator)
    return np.array([[[int(Fraction(v) * L) for v in r] for r in m] for m in f.coeffs], dtype=np.int64), L


def greedy_decoder(f: Functional, ea, eb) -> tuple:
    """decoder[m][n] = argmax_z sum_{x,y} c[x,y,z] ea[x,m] eb[y,n] (smallest z on ties)."""
    c = np.asarray(f.coeffs, dtype=object)
    ea = np.asarray(ea, dtype=object)
    eb = np.asarray(eb, dtype=object)
    nm, nn = ea.shape[1], eb.shape[1]
    dec = []
    for m in range(nm):
        row = []
        for n in range(nn):
            w = np.outer(ea[:, m], eb[:, n])
            scores = [sum((c[x, y, z] * w[x, y] for x in range(c.shape[0]) for y in range(c.shape[1])), Fraction(0)) for z in range(c.shape[2])]
            row.append(int(max(range(len(scores)), key=lambda z: (scores[z], -z))))
        dec.append(tuple(row))
    return tuple(dec)


def _pair_scores(f: Functional, EA: np.ndarray, EB: np.ndarray) -> np.ndarray:
    """Integer scores[a, b, m, n, z] (scaled) for stacked integer encoders."""
    C, _ = _coeffs_int(f)
    return np.einsum("xyz,axm,byn->abmnz", C, EA, EB, optimize=True)


@dataclass
class Bound:
    value: Fraction
    witness: ClassicalVertex


def classical_bound(s: Scenario, f: Functional) -> Bound:
    """Exact maximum of ``f`` over classical strategies of ``s``."""
    f.check(s)
    encA, encB = _encoders_for(s)
    EA, LA = _scaled(encA)
    EB, LB = _scaled(encB)
    _, LC = _coeffs_int(f)
    best_val = None
    best_ab = None
    # chunk over Alice's encoders to bound memory
    chunk = max(1, 2_000_000 // max(1, EB.shape[0] * EA.shape[2] * EB.shape[2] * f.shape[2]))
    for a0 in range(0, EA.shape[0], chunk):
        sc = _pair_scores(f, EA[a0:a0 + chunk], EB)
        vals = sc.max(axis=4).sum(axis=(2, 3))
        k = int(np.argmax(vals))
        a, b = divmod(k, vals.shape[1])
        v = int(vals[a, b])
        if best_val is None or v > best_val:
            best_val, best_ab = v, (a0 + a, b)
    value = Fraction(best_val, LA * LB * LC)
    ea, eb = encA[best_ab[0]], encB[best_ab[1]]
    dec = greedy_decoder(f, ea, eb)
    p = product_behavior(ea, eb, dec, s.nz)
    return Bound(value, ClassicalVertex(Behavior(p), ea, eb, dec))


def brute_force_bound(s: Scenario, f: Functional) -> Fraction:
    """Maximum over every decoder explicitly (small scenarios only)."""
    encA, encB = _encoders_for(s)
    best = None
    nm, nn = encA[0].shape[1], encB[0].shape[1]
    for ea in encA:
        for eb in encB:
            for dec in itertools.product(range(s.nz), repeat=nm * nn):
                tab = tuple(tuple(dec[m * nn:(m + 1) * nn]) for m in range(nm))
                v = evaluate_functional(f, product_behavior(ea, eb, tab, s.nz))
                if best is None or v > best:
                    best = v
    return best


# ---------------------------------------------------------------------------
# facets


@dataclass
class FacetCheck:
    valid: bool
    tight_dim: int
    polytope_dim: int
    max_value: Fraction
    rhs: Fraction

    @property
    def is_facet(self) -> bool:
        return self.valid and self.tight_dim == self.polytope_dim - 1

    @property
    def tight(self) -> bool:
        return self.max_value == self.rhs


def _span_dim(base_points, directions) -> int:
    """Affine dimension of ``base_points`` + span(``directions``)."""
    if not base_points:
        return -1
    p0 = base_points[0]
    rows = [[x - y for x, y in zip(p, p0)] for p in base_points[1:]]
    rows += [list(d) for d in directions]
    rows = [r for r in rows if any(r)]
    if not rows:
        return 0
    arr = np.array([[int(x) for x in r] for r in rows], dtype=object) if all(Fraction(x).denominator == 1 for r in rows for x in r) else None
    if arr is not None and all(abs(int(x)) < 2**31 for x in arr.ravel()):
        # modular rank is a lower bound; confirm the exact rank only when cheap
        lo = polytope._modp_rank(np.array(arr, dtype=np.int64), len(rows[0]))
        if lo == len(rows[0]):
            return lo
    return polytope.rank(rows)


def facet_check(s: Scenario, f: Functional, D1=None, D2=None) -> FacetCheck:
    """Validity and tight-set dimension of ``f <= rhs`` on the classical polytope.

    Dimension-bounded scenarios use the deduplicated vertex list directly.
    Distinguishability scenarios are handled through encoder-pair structure:
    the tight vertices for an optimal encoder pair form a product of per-block
    tie sets, whose affine hull is spanned by single-block swaps.
    """
    if s.is_dimension_bounded:
        behaviors = _dim_behaviors(s.shape)
        b, a = functional_row(f)
        vals = [polytope._dot(a, v) for v in behaviors]
        mx = max(vals)
        tight = [v for v, val in zip(behaviors, vals) if val == b]
        tight_dim = polytope.affine_hull(tight).dim if tight else -1
        pdim = polytope.affine_hull(behaviors).dim
        return FacetCheck(mx <= b, tight_dim, pdim, mx + (rhs_value(f) - b), Fraction(rhs_value(f)))
    if D1 is None or D2 is None:
        c = s.constraint
        D1, D2 = c.D1, c.D2
    D1, D2 = Fraction(D1), Fraction(D2)
    s = s.with_constraint(DistinguishabilityBound(D1, D2))
    encA, encB = _encoders_for(s)
    EA, LA = _scaled(encA)
    EB, LB = _scaled(encB)
    _, LC = _coeffs_int(f)
    sc = _pair_scores(f, EA, EB)  # (a, b, m, n, z)
    top = sc.max(axis=4)
    vals = top.sum(axis=(2, 3))
    mx_int = int(vals.max())
    mx = Fraction(mx_int, LA * LB * LC)
    rhs = Fraction(rhs_value(f, D1, D2))
    nx, ny, nz = s.shape
    nm, nn = EA.shape[2], EB.shape[2]

    def block(a, b, m, n):
        return np.outer(EA[a, :, m], EB[b, :, n])  # scaled by LA*LB

    def point(a, b, dec):
        p = np.zeros((nz, nx, ny), dtype=np.int64)
        for m in range(nm):
            for n in range(nn):
                p[dec[m][n]] += block(a, b, m, n)
        return tuple(p[:-1].ravel().tolist())

    def swap_dir(a, b, m, n, z0, z1):
        d = np.zeros((nz, nx, ny), dtype=np.int64)
        w = block(a, b, m, n)
        d[z1] += w
        d[z0] -= w
        return tuple(d[:-1].ravel().tolist())

    # tight face (only meaningful when the maximum reaches the rhs)
    tight_dim = -1
    if mx == rhs:
        base, dirs = [], []
        for a, b in zip(*np.nonzero(vals == mx_int)):
            dec = tuple(tuple(int(np.argmax(sc[a, b, m, n])) for n in range(nn)) for m in range(nm))
            base.append(point(a, b, dec))
            for m in range(nm):
                for n in range(nn):
                    ties = np.nonzero(sc[a, b, m, n] == top[a, b, m, n])[0]
                    for z1 in ties[1:]:
                        d = swap_dir(a, b, m, n, int(ties[0]), int(z1))
                        if any(d):
                            dirs.append(d)
        tight_dim = _span_dim(base, dirs)
    pdim = _dist_polytope_dim(s.shape, D1, D2)
    return FacetCheck(mx <= rhs, tight_dim, pdim, mx, rhs)


@lru_cache(maxsize=None)
def _dist_polytope_dim(shape, D1, D2) -> int:
    s = Scenario(*shape, DistinguishabilityBound(D1, D2))
    encA, encB = _encoders_for(s)
    EA, _ = _scaled(encA)
    EB, _ = _scaled(encB)
    nx, ny, nz = shape
    nm, nn = EA.shape[2], EB.shape[2]
    base, dirs = [], []
    for a in range(EA.shape[0]):
        for b in range(EB.shape[0]):
            p = np.zeros((nz, nx, ny), dtype=np.int64)
            for m in range(nm):
                for n in range(nn):
                    w = np.outer(EA[a, :, m], EB[b, :, n])
                    p[0] += w
                    for z in range(1, nz):
                        d = np.zeros((nz, nx, ny), dtype=np.int64)
                        d[z] += w
                        d[0] -= w
                        dirs.append(tuple(d[:-1].ravel().tolist()))
            base.append(tuple(p[:-1].ravel().tolist()))
    # many duplicates; dedupe before the rank computation
    base = list(dict.fromkeys(base))
    dirs = list(dict.fromkeys(dirs))
    return _span_dim(base, dirs)


def facet_enumerate_dim(s: Scenario) -> polytope.HPolytope:
    """All facets of the deduplicated dimension-bounded vertex hull."""
    nx, ny, nz = s.shape
    dim = nx * ny * (nz - 1)
    behaviors = _dim_behaviors(s.shape)
    if dim > FACET_ENUM_MAX_DIM or len(behaviors) > FACET_ENUM_MAX_VERTICES:
        raise CapacityError(
            f"scenario {s.shape} has {len(behaviors)} vertices in dimension {dim}; "
            f"limit is {FACET_ENUM_MAX_VERTICES} vertices, dimension {FACET_ENUM_MAX_DIM}"
        )
    return polytope.vertices_to_facets(behaviors)


def contains_facet(h: polytope.HPolytope, f: Functional, D1=0, D2=0) -> bool:
    """Whether ``f <= rhs`` appears among the facets of a full-dimensional ``h``."""
    if h.eqs:
        raise ValueError("comparison needs a full-dimensional H-representation")
    b, a = functional_row(f, D1, D2)
    target = polytope.canonical_ineq(b, a)
    return any(polytope.canonical_ineq(bb, aa) == target for bb, aa in h.ineqs)
