from fractions import Fraction

import numpy as np
import pytest

from mpcomm import corpus, linalg
from mpcomm.model import (
    Behavior,
    DimensionBound,
    DistinguishabilityBound,
    QuantumStrategy,
    Rhs,
    Scenario,
    ValidationError,
    behavior_from_strategy,
    evaluate_functional,
    functional_from_terms,
    rhs_value,
)


def test_scenario_validation():
    with pytest.raises(ValidationError):
        Scenario(1, 2, 2, DimensionBound(2))
    with pytest.raises(ValidationError):
        DimensionBound(0)
    with pytest.raises(ValidationError):
        Scenario(3, 3, 2, DistinguishabilityBound(Fraction(3, 2), Fraction(1, 2)))
    with pytest.raises(ValidationError):
        Scenario(3, 3, 2, DistinguishabilityBound(Fraction(1, 4), Fraction(1, 2)))
    s = Scenario(3, 2, 2, DimensionBound(2))
    assert s.shape == (3, 2, 2) and s.is_dimension_bounded
    assert s.with_constraint(DimensionBound(3)).constraint.d == 3


def test_i1_on_all_ones_behavior():
    f = corpus.get("I1").functional
    p = np.zeros((2, 3, 2))
    p[0] = 1
    assert evaluate_functional(f, Behavior(p)) == 1


def test_functional_from_terms_accumulates():
    f = functional_from_terms((2, 2, 2), [(1, 1, 1, 1), (1, 1, 1, "1/2"), (2, 2, 2, -1)], Rhs(Fraction(3)))
    assert f.coeffs[0, 0, 0] == Fraction(3, 2)
    assert f.coeffs[1, 1, 1] == -1
    assert rhs_value(f) == 3


def test_rhs_depends_on_distinguishability():
    f = corpus.get("table4_r39").functional
    r = f.rhs
    assert r.d1 or r.d2
    assert rhs_value(f, Fraction(2, 3), Fraction(2, 3)) == r.const + (r.d1 + r.d2) * Fraction(2, 3)


def test_shape_mismatch():
    f = corpus.get("I1").functional
    with pytest.raises(ValidationError):
        f.check(Scenario(4, 2, 2, DimensionBound(2)))


def _random_strategy(rng, shape=(3, 2, 2), d=2):
    nx, ny, nz = shape
    A = [linalg.random_pure_state(d, rng) for _ in range(nx)]
    B = [linalg.random_pure_state(d, rng) for _ in range(ny)]
    U = linalg.random_unitary(d * d, rng)
    cuts = np.sort(rng.integers(0, d * d + 1, nz - 1))
    edges = [0, *cuts, d * d]
    M = [U[:, a:b] @ U[:, a:b].conj().T for a, b in zip(edges, edges[1:])]
    return QuantumStrategy(A, B, M)


def test_behavior_is_normalized():
    rng = np.random.default_rng(5)
    for _ in range(20):
        s = _random_strategy(rng, (3, 3, 3))
        p = behavior_from_strategy(s).p
        assert p.shape == (3, 3, 3)
        assert np.allclose(p.sum(axis=0), 1) and p.min() > -1e-12


def test_behavior_matches_direct_trace():
    rng = np.random.default_rng(6)
    s = _random_strategy(rng, (2, 2, 2), d=3)
    p = behavior_from_strategy(s).p
    for x in range(2):
        for y in range(2):
            for z in range(2):
                t = np.trace(np.kron(s.alice_states[x], s.bob_states[y]) @ s.povm[z]).real
                assert np.isclose(p[z, x, y], t)


def test_invalid_strategy_problems():
    rng = np.random.default_rng(7)
    s = _random_strategy(rng)
    bad = QuantumStrategy([2 * s.alice_states[0], *s.alice_states[1:]], s.bob_states, [s.povm[0], s.povm[0]])
    probs = bad.problems()
    assert any("trace" in p for p in probs)
    assert any("sum" in p or "identity" in p for p in probs)
    with pytest.raises(ValidationError):
        behavior_from_strategy(bad)
