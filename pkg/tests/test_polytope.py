import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mpcomm import polytope as P


def cube(n):
    return [tuple(v) for v in itertools.product((0, 1), repeat=n)]


def test_cube_facets():
    h = P.vertices_to_facets(cube(3))
    assert len(h.ineqs) == 6 and not h.eqs
    v = P.facets_to_vertices(h)
    assert sorted(v.vertices) == sorted(P._vec(p) for p in cube(3))


def test_cross_polytope():
    pts = []
    for i in range(4):
        for s in (1, -1):
            e = [0] * 4
            e[i] = s
            pts.append(e)
    h = P.vertices_to_facets(pts)
    assert len(h.ineqs) == 16
    assert all(b == 1 for b, _ in h.ineqs)


def test_lower_dimensional_hull():
    # triangle in the plane x + y + z = 1
    pts = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (Fraction(1, 3), Fraction(1, 3), Fraction(1, 3))]
    hull = P.affine_hull(pts)
    assert hull.dim == 2
    h = P.vertices_to_facets(pts)
    assert len(h.eqs) == 1 and len(h.ineqs) == 3
    assert len(P.extreme_points(pts)) == 3


def test_single_point():
    h = P.vertices_to_facets([(1, 2)])
    assert not h.ineqs and len(h.eqs) == 2


def test_orthant_rays():
    rays = P.extreme_rays([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]])
    assert sorted(rays) == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]


def test_cone_not_pointed():
    with pytest.raises(P.PolytopeError):
        P.extreme_rays([[1, 0], [2, 0]])


@given(st.lists(st.lists(st.integers(-3, 3), min_size=5, max_size=5), min_size=1, max_size=7))
def test_rank_matches_numpy(rows):
    assert P.rank(rows) == np.linalg.matrix_rank(np.array(rows, dtype=float))
    assert P._bareiss_rank([list(r) for r in rows]) == P.rank(rows)
    assert P._modp_rank(np.array(rows, dtype=np.int64), 5) == P.rank(rows)


def test_rref_fractions():
    red, piv = P.rref([[2, 4, 6], [1, 3, 5]])
    assert piv == [0, 1]
    assert red[0] == [1, 0, -1] and red[1] == [0, 1, 2]


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 5), st.integers(0, 2**32 - 1))
def test_random_01_round_trip(n, seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(n + 1, 2 ** n + 1))
    pts = [tuple(int(x) for x in p) for p in rng.integers(0, 2, (k, n))]
    h = P.vertices_to_facets(pts)
    # every point satisfies every facet and each facet is supported
    hull = P.affine_hull(pts)
    for b, a in h.ineqs:
        assert all(P._dot(a, p) <= b for p in pts)
        assert P.tight_rank(pts, b, a) == hull.dim - 1
    ext = P.extreme_points(pts)
    # LP oracle: a point is extreme iff it is not in the hull of the others
    uniq = sorted(set(P._vec(p) for p in pts))
    oracle = [p for p in uniq if not P.in_convex_hull(p, [q for q in uniq if q != p])]
    assert sorted(ext) == oracle
    if hull.dim == n:
        back = P.facets_to_vertices(h)
        assert sorted(back.vertices) == oracle


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_lp_max_matches_vertex_max(n, seed):
    rng = np.random.default_rng(seed)
    pts = [tuple(int(x) for x in p) for p in rng.integers(-3, 4, (n + 4, n))]
    if P.affine_hull(pts).dim < n:
        return
    h = P.vertices_to_facets(pts)
    c = [Fraction(int(x)) for x in rng.integers(-5, 6, n)]
    r = P.lp_max(c, h)
    best = max(sum(ci * xi for ci, xi in zip(c, p)) for p in pts)
    assert r.value == best
    assert h.contains(r.argmax)


def test_lp_errors():
    h = P.HPolytope([(0, (-1, 0))], dim=2)  # x >= 0 only
    with pytest.raises(P.Unbounded):
        P.lp_max([1, 0], h)
    h = P.HPolytope([(-1, (1,)), (-1, (-1,))], dim=1)  # x <= -1 and x >= 1
    with pytest.raises(P.Infeasible):
        P.lp_max([1], h)


def test_simplex_degenerate_cycling_example():
    # Beale's classic cycling example; Bland's rule terminates
    c = [Fraction(3, 4), -150, Fraction(1, 50), -6, 0, 0, 0]
    A = [
        [Fraction(1, 4), -60, Fraction(-1, 25), 9, 1, 0, 0],
        [Fraction(1, 2), -90, Fraction(-1, 50), 3, 0, 1, 0],
        [0, 0, 1, 0, 0, 0, 1],
    ]
    val, x = P.simplex_standard(c, A, [0, 0, 1])
    assert val == Fraction(1, 20)


def test_text_round_trip():
    h = P.vertices_to_facets(cube(3))
    assert P.hpolytope_to_text(P.hpolytope_from_text(P.hpolytope_to_text(h))) == P.hpolytope_to_text(h)
    v = P.VPolytope([(0, Fraction(1, 2)), (1, 0)])
    assert P.vpolytope_from_text(P.vpolytope_to_text(v)).vertices == sorted(v.vertices)


def test_canonical_forms():
    assert P.canonical_ineq(Fraction(1, 2), (Fraction(1, 4), 0)) == (2, (1, 0))
    assert P.canonical_eq(-2, (-4, 2)) == P.canonical_eq(2, (4, -2))
