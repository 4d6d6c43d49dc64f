import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mpcomm import corpus, formats, linalg
from mpcomm.model import ValidationError, behavior_from_strategy, evaluate_functional


@pytest.mark.parametrize("name", ["I1", "I3", "I6", "table4_r39", "table_432_r02"])
def test_inequality_round_trip(name):
    e = corpus.get(name)
    obj = formats.dump_inequality(e.scenario(), e.functional)
    text = json.dumps(obj)
    s, f = formats.parse_inequality(json.loads(text))
    assert s == e.scenario()
    assert np.array_equal(f.coeffs, e.functional.coeffs)
    assert f.rhs == e.functional.rhs
    assert formats.dump_inequality(s, f) == obj


def test_inequality_errors():
    good = formats.dump_inequality(corpus.get("I1").scenario(), corpus.get("I1").functional)
    bad = dict(good, terms=[{"x": 4, "y": 1, "z": 1, "c": 1}])
    with pytest.raises(ValidationError):
        formats.parse_inequality(bad)
    with pytest.raises(ValidationError):
        formats.parse_inequality({"terms": []})
    with pytest.raises(ValidationError):
        formats.parse_inequality(dict(good, constraint={"type": "entropy"}))


def test_distinguishability_without_values():
    e = corpus.get("I6")
    obj = formats.dump_inequality(e.scenario(), e.functional)
    obj["constraint"] = {"type": "distinguishability"}
    s, f = formats.parse_inequality(obj)
    assert s is None and f.shape == (3, 3, 2)


def test_read_inequality_file(tmp_path):
    e = corpus.get("I2")
    p = tmp_path / "mine.json"
    p.write_text(json.dumps(formats.dump_inequality(e.scenario(), e.functional)))
    s, f = formats.read_inequality_file(p)
    assert f.name == "mine" and s.shape == (4, 2, 2)
    p.write_text("{not json")
    with pytest.raises(ValidationError):
        formats.read_inequality_file(p)


def test_strategy_vectors_and_complement():
    k0, k1 = [1, 0], [0, 1]
    obj = {
        "alice": [k0, k1, [[0.5, 0], [0.5, 0]]],
        "bob": [k0, [[0.6, 0], [0, 0.8]]],
        "povm": [{"terms": [[1, [1, 0, 0, 0]]]}, "complement"],
    }
    rep = formats.parse_strategy(obj)
    assert len(rep.warnings) == 1 and "alice state 3" in rep.warnings[0]
    s = rep.strategy
    assert np.allclose(s.povm[0] + s.povm[1], np.eye(4))
    assert np.allclose(s.bob_states[1], [[0.36, -0.48j], [0.48j, 0.64]])


def test_strategy_errors():
    with pytest.raises(ValidationError):
        formats.parse_strategy({"alice": [[1, 0]]})
    with pytest.raises(ValidationError):
        formats.parse_strategy({"alice": [[1, 0]], "bob": [[1, 0]], "povm": ["complement", "complement"]})


def test_strategy_round_trip():
    rng = np.random.default_rng(2)
    from mpcomm.model import QuantumStrategy

    A = [linalg.random_pure_state(2, rng) for _ in range(3)]
    B = [linalg.random_pure_state(2, rng) for _ in range(2)]
    P = linalg.projector(linalg.random_unitary(4, rng)[:, 0])
    s = QuantumStrategy(A, B, [P, np.eye(4) - P])
    back = formats.parse_strategy(json.loads(json.dumps(formats.dump_strategy(s)))).strategy
    f = corpus.get("I1").functional
    v0 = evaluate_functional(f, behavior_from_strategy(s))
    v1 = evaluate_functional(f, behavior_from_strategy(back))
    assert abs(v0 - v1) < 1e-12


def test_bundled_strategies():
    rep = formats.read_strategy_file(formats_path("I1"))
    assert not rep.warnings
    v = evaluate_functional(corpus.get("I1").functional, behavior_from_strategy(rep.strategy))
    assert abs(v - (1 + np.sqrt(2))) < 1e-9
    printed = formats.read_strategy_file(formats_path("I1_printed")).strategy
    assert abs(evaluate_functional(corpus.get("I1").functional, behavior_from_strategy(printed)) - 1) < 1e-9


def formats_path(name):
    from importlib import resources

    return resources.files("mpcomm") / "data" / "strategies" / f"{name}.json"


def test_i6_file_flags_normalization():
    rep = formats.read_strategy_file(formats_path("I6"))
    assert any("norm" in w for w in rep.warnings)
    assert rep.strategy.problems()
    good = formats.read_strategy_file(formats_path("I6_optimal"))
    assert not good.strategy.problems()


_values = st.one_of(st.none(), st.floats(-1e6, 1e6, allow_nan=False),
                    st.fractions(max_denominator=50), st.integers(-1000, 1000))


@given(st.text("abcI0123456789_", min_size=1, max_size=8), st.sampled_from(["classical", "seesaw", "hierarchy"]),
       _values, st.one_of(st.none(), st.integers(2, 6)), st.one_of(st.none(), st.integers(0, 10**6)))
def test_csv_and_json_round_trip(name, method, value, d, seed):
    rec = formats.ResultRecord(name, method, value, d, None, None, Fraction(2), 1.5, seed, 12.5)
    text = formats.records_to_csv([rec, rec])
    assert formats.records_to_csv(formats.csv_to_rows(text)) == text
    j = json.dumps([rec.to_json()], sort_keys=True, indent=2)
    assert json.dumps(json.loads(j), sort_keys=True, indent=2) == j


def test_csv_columns_fixed():
    text = formats.records_to_csv([])
    assert text.strip() == ",".join(formats.CSV_COLUMNS)
    assert formats.CSV_COLUMNS == ["ineq", "d", "D1", "D2", "method", "value", "classical", "paper_value", "seed", "wall_ms"]
