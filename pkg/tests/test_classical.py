import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mpcomm import classical, corpus, polytope
from mpcomm.model import (
    DimensionBound,
    DistinguishabilityBound,
    Functional,
    Rhs,
    Scenario,
    evaluate_functional,
    functional_from_terms,
)

TWO_THIRDS = Fraction(2, 3)


def dim_scenario(*shape):
    return Scenario(*shape, DimensionBound(2))


@pytest.mark.parametrize("shape,count", [
    ((2, 2, 2), 256), ((3, 2, 2), 512), ((4, 2, 2), 1024), ((3, 2, 3), 2592), ((4, 3, 2), 2048),
])
def test_raw_vertex_counts(shape, count):
    s = dim_scenario(*shape)
    assert classical.raw_vertex_count_dim(s) == count
    assert classical.enum_vertices_dim(s).raw_count == count


def test_vertices_are_deterministic_behaviors():
    vs = classical.enum_vertices_dim(dim_scenario(3, 2, 2))
    for v in vs.vertices[::37]:
        p = v.behavior.p
        assert set(np.unique(p)) <= {0, 1}
        assert np.all(p.sum(axis=0) == 1)


@pytest.mark.parametrize("name,value", [("I1", 2), ("I2", 2), ("I3", 3), ("I4", 10), ("I5", 8), ("I6", 5)])
def test_classical_bounds(name, value):
    e = corpus.get(name)
    b = classical.classical_bound(e.scenario(), e.functional)
    assert b.value == value
    # the witness attains the bound
    assert evaluate_functional(e.functional, b.witness.behavior) == value


def _random_functional(rng, shape):
    c = rng.integers(-3, 4, shape)
    return Functional(c.astype(np.int64), Rhs(), "random")


@pytest.mark.parametrize("shape", [(2, 2, 2), (3, 2, 2)])
def test_greedy_decoder_is_optimal_exhaustively(shape):
    rng = np.random.default_rng(sum(shape))
    nz = shape[2]
    for _ in range(3):
        f = _random_functional(rng, shape)
        EA = classical.deterministic_encoders(shape[0], 2)
        EB = classical.deterministic_encoders(shape[1], 2)
        for ea in EA:
            for eb in EB:
                g = classical.greedy_decoder(f, ea, eb)
                gv = evaluate_functional(f, classical.product_behavior(ea, eb, g, nz))
                best = max(
                    evaluate_functional(f, classical.product_behavior(ea, eb, (dec[:2], dec[2:]), nz))
                    for dec in itertools.product(range(nz), repeat=4)
                )
                assert gv == best


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bound_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    s = dim_scenario(2, 2, 2)
    f = _random_functional(rng, (2, 2, 2))
    assert classical.classical_bound(s, f).value == classical.brute_force_bound(s, f)


@pytest.mark.parametrize("name", ["I1", "I2"])
def test_bound_matches_lp_over_hull(name):
    e = corpus.get(name)
    s = e.scenario()
    vs = classical.enum_vertices_dim(s)
    h = polytope.vertices_to_facets(vs.behaviors)
    b, a = classical.functional_row(e.functional)
    lp = polytope.lp_max(a, h)
    # a.x <= b is f <= rhs shifted, so max f = rhs - (b - max a.x)
    rhs = e.functional.rhs.const
    assert rhs - (b - lp.value) == classical.classical_bound(s, e.functional).value


def test_facets_of_322():
    s = dim_scenario(3, 2, 2)
    h = classical.facet_enumerate_dim(s)
    for name in corpus.names("table1"):
        assert classical.contains_facet(h, corpus.get(name).functional)
    # every classical vertex satisfies every facet, exactly
    for v in classical.enum_vertices_dim(s).behaviors:
        assert h.contains(v)


def test_facets_of_422():
    h = classical.facet_enumerate_dim(dim_scenario(4, 2, 2))
    for name in corpus.names("table2"):
        assert classical.contains_facet(h, corpus.get(name).functional)


@pytest.mark.slow
def test_facets_of_323():
    h = classical.facet_enumerate_dim(dim_scenario(3, 2, 3))
    for name in corpus.names("table3"):
        assert classical.contains_facet(h, corpus.get(name).functional)


def test_facet_enumeration_capacity():
    with pytest.raises(classical.CapacityError, match="limit"):
        classical.facet_enumerate_dim(dim_scenario(5, 3, 2))


def test_facet_check_examples():
    s = dim_scenario(3, 2, 2)
    assert classical.facet_check(s, corpus.get("I1").functional).is_facet
    assert classical.facet_check(s, corpus.get("table1_r02").functional).is_facet
    total = functional_from_terms((3, 2, 2), [(x, y, 1, 1) for x in (1, 2, 3) for y in (1, 2)], Rhs(Fraction(6)))
    fc = classical.facet_check(s, total)
    assert fc.valid and fc.tight and not fc.is_facet and fc.tight_dim == 0
    loose = functional_from_terms((3, 2, 2), [(1, 1, 1, 1)], Rhs(Fraction(2)))
    fc = classical.facet_check(s, loose)
    assert fc.valid and not fc.tight
    bad = functional_from_terms((3, 2, 2), [(1, 1, 1, 1)], Rhs(Fraction(0)))
    assert not classical.facet_check(s, bad).valid


def test_distinguishability_of_encoders():
    ident = np.eye(3, 4, dtype=int)
    assert classical.distinguishability(ident) == 1
    const = np.zeros((3, 4), dtype=int)
    const[:, 0] = 1
    assert classical.distinguishability(const) == Fraction(1, 3)


def _selection_form_vertices(n, D):
    """Encoder polytope from sum_m p(m|s(m)) <= nD over every selection s."""
    nm = classical.n_messages_dist(n)
    nvar = n * nm
    ineqs, eqs = [], []
    for x in range(n):
        for m in range(nm):
            a = [0] * nvar
            a[x * nm + m] = -1
            ineqs.append((0, a))
        a = [0] * nvar
        for m in range(nm):
            a[x * nm + m] = 1
        eqs.append((1, a))
    for sel in itertools.product(range(n), repeat=nm):
        a = [0] * nvar
        for m, x in enumerate(sel):
            a[x * nm + m] = 1
        ineqs.append((n * D, a))
    return polytope.facets_to_vertices(polytope.HPolytope(ineqs, eqs, nvar)).vertices


@pytest.mark.slow
def test_encoder_vertices_two_routes():
    D = TWO_THIRDS
    lifted = sorted(tuple(e.ravel()) for e in classical.enum_encoder_vertices_dist(3, D))
    direct = sorted(_selection_form_vertices(3, D))
    assert lifted == direct
    assert len(lifted) == 64
    for e in classical.enum_encoder_vertices_dist(3, D):
        assert classical.distinguishability(e) <= D


def test_encoder_vertices_extremes():
    # D = 1/n: only constant encoders (a message independent of x)
    v = classical.enum_encoder_vertices_dist(2, Fraction(1, 2))
    assert len(v) == 2
    # D = 1: every deterministic encoder
    assert len(classical.enum_encoder_vertices_dist(2, 1)) == 4


@pytest.mark.slow
def test_bound_monotone_in_distinguishability():
    f = corpus.get("I6").functional
    grid = [Fraction(k, 12) for k in (4, 6, 8, 10, 12)]
    vals = {}
    for D1 in grid:
        for D2 in grid:
            s = Scenario(3, 3, 2, DistinguishabilityBound(D1, D2))
            vals[D1, D2] = classical.classical_bound(s, f).value
    for (D1, D2), v in vals.items():
        for (E1, E2), w in vals.items():
            if D1 <= E1 and D2 <= E2:
                assert v <= w
