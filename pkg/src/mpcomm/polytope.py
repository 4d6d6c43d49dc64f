"""Exact rational polyhedral computations.

Vertex/facet conversion uses the double description method on integer
cones; linear programs are solved with a dense rational simplex (Bland's
rule).  Floating point is never used for a decision here: the one numeric
shortcut (a modular rank used as a lower bound in the adjacency test) only
ever confirms what exact arithmetic would.

Inequalities are stored as ``(b, a)`` pairs meaning ``a . x <= b``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

Vector = tuple  # tuple of Fraction


class PolytopeError(ValueError):
    pass


class Unbounded(PolytopeError):
    pass


class Infeasible(PolytopeError):
    pass


def _vec(v) -> Vector:
    return tuple(Fraction(x) for x in v)


def _lcm_den(v) -> int:
    out = 1
    for x in v:
        out = math.lcm(out, Fraction(x).denominator)
    return out


def _int_row(v) -> list[int]:
    """Positive rescaling of a rational row to coprime integers."""
    m = _lcm_den(v)
    ints = [int(Fraction(x) * m) for x in v]
    g = 0
    for x in ints:
        g = math.gcd(g, x)
    return [x // g for x in ints] if g > 1 else ints


def canonical_ineq(b, a) -> tuple[int, tuple[int, ...]]:
    """Scale ``a.x <= b`` to coprime integers (sign preserved)."""
    row = _int_row([b, *a])
    return row[0], tuple(row[1:])


def canonical_eq(b, a) -> tuple[int, tuple[int, ...]]:
    """Scale ``a.x = b`` to coprime integers with a positive leading nonzero entry."""
    row = _int_row([b, *a])
    lead = next((x for x in row[1:] if x != 0), row[0])
    if lead < 0:
        row = [-x for x in row]
    return row[0], tuple(row[1:])


@dataclass
class HPolytope:
    ineqs: list = field(default_factory=list)  # (b, a): a.x <= b
    eqs: list = field(default_factory=list)  # (b, a): a.x == b
    dim: int | None = None

    def __post_init__(self):
        self.ineqs = [(Fraction(b), _vec(a)) for b, a in self.ineqs]
        self.eqs = [(Fraction(b), _vec(a)) for b, a in self.eqs]
        if self.dim is None:
            rows = self.ineqs or self.eqs
            self.dim = len(rows[0][1]) if rows else 0

    def contains(self, x) -> bool:
        x = _vec(x)
        return all(_dot(a, x) <= b for b, a in self.ineqs) and all(_dot(a, x) == b for b, a in self.eqs)

    def canonical(self) -> "HPolytope":
        ineqs = sorted(set(canonical_ineq(b, a) for b, a in self.ineqs), key=lambda r: (r[1], r[0]))
        eqs = sorted(set(canonical_eq(b, a) for b, a in self.eqs), key=lambda r: (r[1], r[0]))
        return HPolytope(ineqs, eqs, self.dim)


@dataclass
class VPolytope:
    vertices: list

    def __post_init__(self):
        self.vertices = [_vec(v) for v in self.vertices]

    @property
    def dim(self) -> int:
        return len(self.vertices[0]) if self.vertices else 0


def _dot(a, x):
    return sum((p * q for p, q in zip(a, x)), Fraction(0))


# ---------------------------------------------------------------------------
# exact linear algebra


def rref(rows: Sequence[Sequence], ncols: int | None = None):
    """Reduced row echelon form over the rationals. Returns (rows, pivot columns)."""
    m = [[Fraction(x) for x in r] for r in rows]
    if not m:
        return [], []
    ncols = len(m[0]) if ncols is None else ncols
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows) -> int:
    return len(rref(rows)[1]) if len(rows) else 0


def _bareiss_rank(rows: list[list[int]]) -> int:
    m = [list(r) for r in rows]
    if not m:
        return 0
    nrows, ncols = len(m), len(m[0])
    rk = 0
    prev = 1
    for c in range(ncols):
        piv = next((i for i in range(rk, nrows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[rk], m[piv] = m[piv], m[rk]
        p = m[rk][c]
        for i in range(rk + 1, nrows):
            mi = m[i]
            f = mi[c]
            mr = m[rk]
            m[i] = [(p * mi[j] - f * mr[j]) // prev for j in range(ncols)]
        prev = p
        rk += 1
        if rk == nrows:
            break
    return rk


_PRIME = 2147483629  # < 2**31, so products fit in int64


def _modp_rank(a: np.ndarray, stop_at: int) -> int:
    """Rank of an integer matrix modulo a prime; a lower bound on its rational rank."""
    m = a % _PRIME
    nrows, ncols = m.shape
    rk = 0
    for c in range(ncols):
        if rk == nrows or rk >= stop_at:
            break
        nz = np.nonzero(m[rk:, c])[0]
        if nz.size == 0:
            continue
        piv = rk + nz[0]
        if piv != rk:
            m[[rk, piv]] = m[[piv, rk]]
        inv = pow(int(m[rk, c]), _PRIME - 2, _PRIME)
        m[rk] = (m[rk] * inv) % _PRIME
        below = m[rk + 1:, c].copy()
        if below.any():
            m[rk + 1:] = (m[rk + 1:] - (below[:, None] * m[rk]) % _PRIME) % _PRIME
        rk += 1
    return rk


# ---------------------------------------------------------------------------
# double description


_PAIR_CHUNK = 8_000_000  # uint64 words held at once in the pair screen


def extreme_rays(rows: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """Extreme rays of the pointed cone ``{y : A y >= 0}`` (integer ``A``).

    Rows are inserted in the given order.  Two rays are adjacent when the
    constraint rows tight at both have rank ``n - 2``.  Candidate pairs are
    first screened with the zero-set containment test (exact, vectorized),
    and every surviving pair is confirmed by the rank computation.
    """
    A = [list(map(int, r)) for r in rows]
    if not A:
        raise PolytopeError("empty constraint system")
    n = len(A[0])
    nrows = len(A)
    basis: list[int] = []
    for i in range(nrows):
        if _bareiss_rank([A[j] for j in basis + [i]]) == len(basis) + 1:
            basis.append(i)
            if len(basis) == n:
                break
    if len(basis) < n:
        raise PolytopeError("cone is not pointed (constraint matrix is rank deficient)")
    inv = _inverse([[Fraction(x) for x in A[i]] for i in basis])
    rays = [tuple(_int_row([inv[i][j] for i in range(n)])) for j in range(n)]

    words = (nrows + 63) // 64
    Aint = np.array(A, dtype=np.int64) if _fits_int64(A) else None
    # modular rank is exact when every minor is smaller than the prime
    max_norm = max(math.sqrt(sum(x * x for x in r)) for r in A)
    modp_exact = Aint is not None and (max_norm ** n) < _PRIME

    def zero_mask(r, idx):
        z = np.zeros(words, dtype=np.uint64)
        for i in idx:
            if _idot(A[i], r) == 0:
                z[i // 64] |= np.uint64(1) << np.uint64(i % 64)
        return z

    Z = np.array([zero_mask(r, basis) for r in rays], dtype=np.uint64).reshape(len(rays), words)
    need = n - 2
    for i in range(nrows):
        if i in basis:
            continue
        a = A[i]
        R = _ray_array(rays)
        vals = R @ np.array(a, dtype=R.dtype) if R.dtype != object else np.array([_idot(a, r) for r in rays], dtype=object)
        pos = np.nonzero(vals > 0)[0]
        neg = np.nonzero(vals < 0)[0]
        keep = np.nonzero(vals >= 0)[0]
        bit_word, bit = i // 64, np.uint64(1) << np.uint64(i % 64)
        new_rays = [rays[k] for k in keep]
        newZ = Z[keep].copy()
        newZ[vals[keep] == 0, bit_word] |= bit
        if len(pos) and len(neg):
            added = []
            addedZ = []
            Zneg = Z[neg]
            step = max(1, _PAIR_CHUNK // max(1, len(neg) * words))
            for s0 in range(0, len(pos), step):
                psub = pos[s0:s0 + step]
                common = Z[psub][:, None, :] & Zneg[None, :, :]
                counts = np.bitwise_count(common).sum(axis=2)
                pi, qi = np.nonzero(counts >= need)
                cand = common[pi, qi]
                del common, counts
                if not len(cand):
                    continue
                ok = _combinatorial_adjacent(Z, cand)
                for k in np.nonzero(ok)[0]:
                    p, q = psub[pi[k]], neg[qi[k]]
                    idx = _bits(cand[k])
                    if not _rank_at_least(A, Aint, idx, need, modp_exact):
                        continue
                    vp, vq = int(vals[p]), int(vals[q])
                    r = tuple(vp * y - vq * x for x, y in zip(rays[p], rays[q]))
                    g = 0
                    for x in r:
                        g = math.gcd(g, x)
                    added.append(tuple(x // g for x in r))
                    zc = cand[k].copy()
                    zc[bit_word] |= bit
                    addedZ.append(zc)
            if added:
                new_rays.extend(added)
                newZ = np.vstack([newZ, np.array(addedZ, dtype=np.uint64)])
        rays, Z = new_rays, newZ.reshape(len(new_rays), words)
    return rays


def _ray_array(rays) -> np.ndarray:
    big = max((abs(x) for r in rays for x in r), default=0)
    if big < 2**40:
        return np.array(rays, dtype=np.int64)
    return np.array(rays, dtype=object)


def _combinatorial_adjacent(Z: np.ndarray, cand: np.ndarray) -> np.ndarray:
    """For each candidate common zero set, True if only the two parent rays contain it."""
    out = np.empty(len(cand), dtype=bool)
    step = max(1, 4_000_000 // max(1, Z.shape[0] * Z.shape[1]))
    for s0 in range(0, len(cand), step):
        c = cand[s0:s0 + step]
        contains = ((Z[None, :, :] & c[:, None, :]) == c[:, None, :]).all(axis=2)
        out[s0:s0 + step] = contains.sum(axis=1) <= 2
    return out


def _bits(mask: np.ndarray) -> list[int]:
    out = []
    for w, word in enumerate(mask.tolist()):
        while word:
            low = word & -word
            out.append(w * 64 + low.bit_length() - 1)
            word ^= low
    return out


def _fits_int64(A) -> bool:
    return max((abs(x) for r in A for x in r), default=0) < 2**31


def _idot(a, r) -> int:
    return sum(x * y for x, y in zip(a, r))


def _rank_at_least(A, Aint, idx, need: int, modp_exact: bool) -> bool:
    if need <= 0:
        return True
    if Aint is not None:
        lo = _modp_rank(Aint[idx], need)
        if lo >= need or modp_exact:
            return lo >= need
    return _bareiss_rank([A[j] for j in idx]) >= need


def _inverse(m: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(m)
    aug = [row + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    red, piv = rref(aug, ncols=n)
    if piv != list(range(n)):
        raise PolytopeError("singular matrix")
    return [r[n:] for r in red]


# ---------------------------------------------------------------------------
# affine hulls


@dataclass
class AffineHull:
    """Affine hull of a point set with a coordinate chart.

    ``chart`` lists coordinates that parametrize the hull injectively;
    ``eqs`` are the hull's defining equalities as ``(b, a)`` rows.
    """

    origin: Vector
    chart: list[int]
    eqs: list
    ambient: int

    @property
    def dim(self) -> int:
        return len(self.chart)

    def reduce(self, b, a) -> tuple[Fraction, Vector]:
        """Rewrite ``a.x <= b`` so it only involves chart coordinates (same set on the hull)."""
        b = Fraction(b)
        a = list(map(Fraction, a))
        for eb, ea in self._solved:
            # ea has leading 1 at a non-chart coordinate
            lead = next(j for j in range(self.ambient) if ea[j] != 0 and j not in self.chart)
            f = a[lead]
            if f:
                a = [x - f * y for x, y in zip(a, ea)]
                b -= f * eb
        return b, tuple(a)

    def __post_init__(self):
        # equalities in RREF over non-chart pivots so that reduce() eliminates them
        order = [j for j in range(self.ambient) if j not in self.chart] + list(self.chart)
        rows = [[ea[j] for j in order] + [eb] for eb, ea in self.eqs]
        red, _ = rref(rows, ncols=len(order))
        solved = []
        for r in red:
            a = [Fraction(0)] * self.ambient
            for k, j in enumerate(order):
                a[j] = r[k]
            solved.append((r[-1], tuple(a)))
        self._solved = solved


def affine_hull(points) -> AffineHull:
    pts = [_vec(p) for p in points]
    if not pts:
        raise PolytopeError("empty point set")
    n = len(pts[0])
    v0 = pts[0]
    diffs = [[x - y for x, y in zip(p, v0)] for p in pts[1:]]
    red, piv = rref(diffs, ncols=n) if diffs else ([], [])
    # orthogonal complement of the row space gives the equalities
    free = [j for j in range(n) if j not in piv]
    eqs = []
    for f in free:
        a = [Fraction(0)] * n
        a[f] = Fraction(1)
        for r, p in zip(red, piv):
            a[p] = -r[f]
        eqs.append((_dot(a, v0), tuple(a)))
    return AffineHull(v0, list(piv), eqs, n)


# ---------------------------------------------------------------------------
# conversions


def vertices_to_facets(v: VPolytope | Iterable) -> HPolytope:
    """Irredundant facets of ``conv(V)`` inside its affine hull.

    Facets are expressed on the hull's chart coordinates (see
    :class:`AffineHull`), in canonical integer form; hull equalities are
    returned in ``eqs``.
    """
    pts = v.vertices if isinstance(v, VPolytope) else [_vec(p) for p in v]
    if not pts:
        raise PolytopeError("no vertices given")
    hull = affine_hull(pts)
    n = hull.ambient
    k = hull.dim
    if k == 0:
        return HPolytope([], [canonical_eq(b, a) for b, a in hull.eqs], n)
    # cone of valid inequalities y0 + y.x_chart >= 0
    rows = []
    seen = set()
    for p in pts:
        row = tuple(_int_row([Fraction(1)] + [p[j] for j in hull.chart]))
        if row not in seen:
            seen.add(row)
            rows.append(row)
    rays = extreme_rays(sorted(rows))
    ineqs = []
    for r in rays:
        a = [Fraction(0)] * n
        for t, j in enumerate(hull.chart):
            a[j] = Fraction(-r[t + 1])
        ineqs.append(canonical_ineq(r[0], a))
    return HPolytope(sorted(set(ineqs), key=lambda r: (r[1], r[0])), [canonical_eq(b, a) for b, a in hull.eqs], n)


def facets_to_vertices(h: HPolytope) -> VPolytope:
    n = h.dim
    # parametrize the equality set x = x0 + N t
    if h.eqs:
        red, piv = rref([list(a) + [b] for b, a in h.eqs], ncols=n)
        for r in red:
            if all(x == 0 for x in r[:n]) and r[n] != 0:
                raise Infeasible("inconsistent equalities")
        red = [r for r in red if any(x != 0 for x in r[:n])]
        piv = piv[: len(red)]
    else:
        red, piv = [], []
    free = [j for j in range(n) if j not in piv]
    x0 = [Fraction(0)] * n
    for r, p in zip(red, piv):
        x0[p] = r[n]
    N = [[Fraction(0)] * len(free) for _ in range(n)]
    for t, f in enumerate(free):
        N[f][t] = Fraction(1)
        for r, p in zip(red, piv):
            N[p][t] = -r[f]
    if not free:
        pt = tuple(x0)
        if not h.contains(pt):
            raise Infeasible("empty polytope")
        return VPolytope([pt])
    # inequalities in t: (a N) t <= b - a x0  ->  cone rows [b', -a'] on (lam, t)
    rows = []
    for b, a in h.ineqs:
        an = [sum((a[i] * N[i][t] for i in range(n)), Fraction(0)) for t in range(len(free))]
        bn = b - _dot(a, x0)
        if all(x == 0 for x in an):
            if bn < 0:
                raise Infeasible("empty polytope")
            continue
        rows.append(tuple(_int_row([bn] + [-x for x in an])))
    rows.append(tuple([1] + [0] * len(free)))
    rows = list(dict.fromkeys(rows))
    rays = extreme_rays(rows)
    out = []
    for r in rays:
        if r[0] == 0:
            raise Unbounded("polyhedron is unbounded")
        t = [Fraction(x, r[0]) for x in r[1:]]
        out.append(tuple(x0[i] + sum((N[i][j] * t[j] for j in range(len(t))), Fraction(0)) for i in range(n)))
    if not out:
        raise Infeasible("empty polytope")
    return VPolytope(sorted(set(out)))


# ---------------------------------------------------------------------------
# linear programming


@dataclass
class LPResult:
    value: Fraction
    argmax: Vector


def simplex_standard(c, A, b, max_iter: int = 100000):
    """Maximize ``c.x`` s.t. ``A x = b, x >= 0`` exactly (two-phase, Bland's rule).

    Returns ``(value, x)``; raises :class:`Infeasible` or :class:`Unbounded`.
    """
    m = len(A)
    n = len(c)
    A = [[Fraction(x) for x in row] for row in A]
    b = [Fraction(x) for x in b]
    for i in range(m):
        if b[i] < 0:
            A[i] = [-x for x in A[i]]
            b[i] = -b[i]
    # tableau with artificials n..n+m-1
    T = [A[i] + [Fraction(int(i == j)) for j in range(m)] + [b[i]] for i in range(m)]
    basis = list(range(n, n + m))
    width = n + m

    def pivot(r, col):
        inv = 1 / T[r][col]
        T[r] = [x * inv for x in T[r]]
        pr = T[r]
        for i in range(m):
            if i != r:
                f = T[i][col]
                if f:
                    T[i] = [x - f * y for x, y in zip(T[i], pr)]
        basis[r] = col

    def run(cost, allowed):
        it = 0
        while True:
            it += 1
            if it > max_iter:
                raise PolytopeError("simplex iteration limit")
            # reduced costs for maximization
            cb = [cost[j] for j in basis]
            enter = None
            for j in allowed:
                if j in basis:
                    continue
                rc = cost[j] - sum((cb[i] * T[i][j] for i in range(m) if T[i][j]), Fraction(0))
                if rc > 0:
                    enter = j
                    break
            if enter is None:
                return
            best = None
            for i in range(m):
                if T[i][enter] > 0:
                    ratio = T[i][-1] / T[i][enter]
                    if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                        best = (ratio, i)
            if best is None:
                raise Unbounded("LP is unbounded")
            pivot(best[1], enter)

    # phase 1: maximize -sum(artificials)
    cost1 = [Fraction(0)] * n + [Fraction(-1)] * m
    run(cost1, range(width))
    if any(T[i][-1] != 0 for i in range(m) if basis[i] >= n):
        raise Infeasible("LP is infeasible")
    # drive remaining artificials out of the basis
    for i in range(m):
        if basis[i] >= n:
            col = next((j for j in range(n) if T[i][j] != 0), None)
            if col is not None:
                pivot(i, col)
    keep = [i for i in range(m) if basis[i] < n]
    T = [T[i] for i in keep]
    basis = [basis[i] for i in keep]
    m = len(T)
    cost2 = [Fraction(x) for x in c] + [Fraction(0)] * (width - n)
    run(cost2, range(n))
    x = [Fraction(0)] * n
    for i in range(m):
        x[basis[i]] = T[i][-1]
    return _dot(c, x), x


def lp_max(objective, h: HPolytope) -> LPResult:
    """Exact maximum of ``objective . x`` over ``h``."""
    n = h.dim
    c = _vec(objective)
    # x = xp - xm, slack per inequality
    ni = len(h.ineqs)
    cost = list(c) + [-x for x in c] + [Fraction(0)] * ni
    A, b = [], []
    for k, (bb, a) in enumerate(h.ineqs):
        row = list(a) + [-x for x in a] + [Fraction(0)] * ni
        row[2 * n + k] = Fraction(1)
        A.append(row)
        b.append(bb)
    for bb, a in h.eqs:
        A.append(list(a) + [-x for x in a] + [Fraction(0)] * ni)
        b.append(bb)
    val, sol = simplex_standard(cost, A, b)
    x = tuple(sol[i] - sol[n + i] for i in range(n))
    return LPResult(val, x)


def in_convex_hull(point, others) -> bool:
    """Exact test whether ``point`` lies in ``conv(others)``."""
    others = [_vec(o) for o in others]
    if not others:
        return False
    point = _vec(point)
    n = len(point)
    A = [[o[i] for o in others] for i in range(n)] + [[Fraction(1)] * len(others)]
    b = list(point) + [Fraction(1)]
    try:
        simplex_standard([Fraction(0)] * len(others), A, b)
    except Infeasible:
        return False
    return True


def extreme_points(points) -> list[Vector]:
    """The points that are not convex combinations of the others (duplicates removed).

    A point is extreme exactly when the facets of the hull tight at it have
    full rank inside the affine hull.
    """
    pts = sorted(set(_vec(p) for p in points))
    if len(pts) <= 1:
        return pts
    hull = affine_hull(pts)
    if hull.dim == 0:
        return pts[:1]
    h = vertices_to_facets(pts)
    out = []
    for p in pts:
        tight = [[a[j] for j in hull.chart] for b, a in h.ineqs if _dot(a, p) == b]
        if len(tight) >= hull.dim and rank(tight) == hull.dim:
            out.append(p)
    return out


def tight_rank(points, b, a) -> int:
    """Affine dimension of the set of ``points`` with ``a.x == b``."""
    tight = [p for p in points if _dot(a, p) == Fraction(b)]
    if not tight:
        return -1
    return affine_hull(tight).dim


# ---------------------------------------------------------------------------
# text format: one row per line, constant first, '#' comments


def format_rows(rows, header: str | None = None) -> str:
    lines = []
    if header:
        lines.extend("# " + h for h in header.splitlines())
    for r in rows:
        lines.append(" ".join(str(x) for x in r))
    return "\n".join(lines) + "\n"


def parse_rows(text: str) -> list[tuple[Fraction, ...]]:
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(tuple(Fraction(t) for t in line.split()))
    return out


def hpolytope_to_text(h: HPolytope) -> str:
    """Inequalities as ``b -a1 ... -an`` (meaning ``b - a.x >= 0``), equalities prefixed with ``=``."""
    c = h.canonical()
    lines = [f"# H-representation, dimension {h.dim}"]
    for b, a in c.eqs:
        lines.append("= " + " ".join(str(x) for x in (b, *(-y for y in a))))
    for b, a in c.ineqs:
        lines.append(" ".join(str(x) for x in (b, *(-y for y in a))))
    return "\n".join(lines) + "\n"


def hpolytope_from_text(text: str) -> HPolytope:
    ineqs, eqs, dim = [], [], None
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        is_eq = line.startswith("=")
        vals = [Fraction(t) for t in line.lstrip("=").split()]
        row = (vals[0], tuple(-x for x in vals[1:]))
        dim = len(vals) - 1
        (eqs if is_eq else ineqs).append(row)
    return HPolytope(ineqs, eqs, dim)


def vpolytope_to_text(v: VPolytope) -> str:
    """Vertices as ``1 x1 ... xn`` rows."""
    lines = [f"# V-representation, dimension {v.dim}"]
    for p in sorted(v.vertices):
        lines.append(" ".join(str(x) for x in (1, *p)))
    return "\n".join(lines) + "\n"


def vpolytope_from_text(text: str) -> VPolytope:
    return VPolytope([r[1:] for r in parse_rows(text)])
