"""JSON/CSV file formats for inequalities, strategies and result records.

Inequality file::

    {"scenario": {"nx": 3, "ny": 2, "nz": 2},
     "constraint": {"type": "dimension", "d": 2},
     "terms": [{"x": 1, "y": 2, "z": 1, "c": -1}, ...],
     "rhs": {"const": 2, "d1": 0, "d2": 0}}

Indices are 1-based.  ``constraint.type`` is ``dimension`` or
``distinguishability`` (optional ``D1``/``D2`` as fraction strings).

Strategy file::

    {"alice": [state, ...], "bob": [state, ...], "povm": [effect, ...]}

A state is a vector or a density matrix.  An effect is a matrix, an object
``{"terms": [[weight, vector], ...]}`` (sum of weighted rank-one
projectors; vectors are used as given, without renormalizing), or the
string ``"complement"`` for ``I`` minus the other effects.  Complex
numbers are ``[re, im]`` pairs; plain reals are accepted too.
"""
from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .model import (
    DimensionBound,
    DistinguishabilityBound,
    Functional,
    QuantumStrategy,
    Rhs,
    Scenario,
    ValidationError,
    functional_from_terms,
)


def _frac(v) -> Fraction:
    return Fraction(str(v)) if isinstance(v, float) else Fraction(v)


def _frac_str(v: Fraction) -> str | int:
    v = Fraction(int(v)) if isinstance(v, np.integer) else Fraction(v)
    return int(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def parse_inequality(obj: dict, name: str | None = None) -> tuple[Scenario | None, Functional]:
    """Returns the scenario (``None`` if the constraint values are absent) and the functional."""
    try:
        sc = obj["scenario"]
        shape = (int(sc["nx"]), int(sc["ny"]), int(sc["nz"]))
        terms = [(int(t["x"]), int(t["y"]), int(t["z"]), _frac(t["c"])) for t in obj["terms"]]
        r = obj.get("rhs", {})
        rhs = Rhs(_frac(r.get("const", 0)), _frac(r.get("d1", 0)), _frac(r.get("d2", 0)))
        con = obj.get("constraint", {"type": "dimension"})
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed inequality: {exc!r}") from exc
    for x, y, z, _ in terms:
        if not (1 <= x <= shape[0] and 1 <= y <= shape[1] and 1 <= z <= shape[2]):
            raise ValidationError(f"term index ({x},{y},{z}) outside scenario {shape}")
    f = functional_from_terms(shape, terms, rhs, name or obj.get("name"))
    scenario = None
    if con.get("type") == "dimension":
        scenario = Scenario(*shape, DimensionBound(int(con.get("d", 2))))
    elif con.get("type") == "distinguishability":
        if "D1" in con and "D2" in con:
            scenario = Scenario(*shape, DistinguishabilityBound(_frac(con["D1"]), _frac(con["D2"])))
    else:
        raise ValidationError(f"unknown constraint type {con.get('type')!r}")
    return scenario, f


def dump_inequality(scenario: Scenario, f: Functional) -> dict:
    nx, ny, nz = f.shape
    terms = []
    for z in range(nz):
        for x in range(nx):
            for y in range(ny):
                c = f.coeffs[x, y, z]
                if c != 0:
                    terms.append({"x": x + 1, "y": y + 1, "z": z + 1, "c": _frac_str(c)})
    con = scenario.constraint
    if isinstance(con, DimensionBound):
        cd = {"type": "dimension", "d": con.d}
    else:
        cd = {"type": "distinguishability", "D1": _frac_str(con.D1), "D2": _frac_str(con.D2)}
    return {
        "scenario": {"nx": nx, "ny": ny, "nz": nz},
        "constraint": cd,
        "terms": terms,
        "rhs": {"const": _frac_str(f.rhs.const), "d1": _frac_str(f.rhs.d1), "d2": _frac_str(f.rhs.d2)},
    }


def read_inequality_file(path) -> tuple[Scenario | None, Functional]:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    return parse_inequality(obj, name=obj.get("name") or os.path.splitext(os.path.basename(str(path)))[0])


# strategies ---------------------------------------------------------------

def _num(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValidationError(f"complex entry must be [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(float(v))


def _vector(v) -> np.ndarray:
    return np.array([_num(e) for e in v], dtype=complex)


def _is_vector(v) -> bool:
    return all(not isinstance(e, list) or (len(e) == 2 and not isinstance(e[0], list)) for e in v)


def _matrix(v) -> np.ndarray:
    return np.array([[_num(e) for e in row] for row in v], dtype=complex)


@dataclass
class StrategyReport:
    strategy: QuantumStrategy
    warnings: list[str] = field(default_factory=list)


def parse_strategy(obj: dict) -> StrategyReport:
    warnings = []

    def state(v, label):
        if _is_vector(v):
            vec = _vector(v)
            n2 = float(np.vdot(vec, vec).real)
            if abs(n2 - 1) > 1e-9:
                warnings.append(f"{label}: vector has squared norm {n2:.9g}, not 1")
            return np.outer(vec, vec.conj())
        return _matrix(v)

    try:
        alice = [state(v, f"alice state {i}") for i, v in enumerate(obj["alice"], 1)]
        bob = [state(v, f"bob state {i}") for i, v in enumerate(obj["bob"], 1)]
        n = alice[0].shape[0] * bob[0].shape[0]
        effects: list[np.ndarray | None] = []
        for z, e in enumerate(obj["povm"], 1):
            if e == "complement":
                effects.append(None)
            elif isinstance(e, dict):
                m = np.zeros((n, n), dtype=complex)
                for k, (w, v) in enumerate(e["terms"], 1):
                    vec = _vector(v)
                    n2 = float(np.vdot(vec, vec).real)
                    if abs(n2 - 1) > 1e-9:
                        warnings.append(f"effect {z} vector {k}: squared norm {n2:.9g}, not 1")
                    m += float(_frac(w)) * np.outer(vec, vec.conj())
                effects.append(m)
            else:
                effects.append(_matrix(e))
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ValidationError(f"malformed strategy: {exc!r}") from exc
    holes = [i for i, e in enumerate(effects) if e is None]
    if len(holes) > 1:
        raise ValidationError("at most one effect may be 'complement'")
    if holes:
        rest = np.eye(n, dtype=complex) - sum(e for e in effects if e is not None)
        effects[holes[0]] = rest
    return StrategyReport(QuantumStrategy(alice, bob, effects), warnings)


def read_strategy_file(path) -> StrategyReport:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    return parse_strategy(obj)


def _cplx(z: complex):
    return [float(z.real), float(z.imag)]


def dump_strategy(s: QuantumStrategy) -> dict:
    return {
        "alice": [[[_cplx(v) for v in row] for row in r] for r in s.alice_states],
        "bob": [[[_cplx(v) for v in row] for row in r] for r in s.bob_states],
        "povm": [[[_cplx(v) for v in row] for row in m] for m in s.povm],
    }


# result records ----------------------------------------------------------

CSV_COLUMNS = ["ineq", "d", "D1", "D2", "method", "value", "classical", "paper_value", "seed", "wall_ms"]


@dataclass
class ResultRecord:
    ineq: str
    method: str
    value: float | Fraction | None
    d: int | None = None
    D1: Fraction | None = None
    D2: Fraction | None = None
    classical: float | Fraction | None = None
    paper_value: float | None = None
    seed: int | None = None
    wall_ms: float | None = None
    status: str = "ok"
    notes: list[str] = field(default_factory=list)

    def row(self) -> dict:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, Fraction):
                return str(_frac_str(v))
            if isinstance(v, float):
                return repr(round(v, 10))
            return str(v)

        return {k: fmt(getattr(self, k)) for k in CSV_COLUMNS}

    def to_json(self) -> dict:
        out = {}
        for k in CSV_COLUMNS + ["status", "notes"]:
            v = getattr(self, k)
            if isinstance(v, Fraction):
                v = _frac_str(v)
            elif isinstance(v, float):
                v = round(v, 10)
            out[k] = v
        return out


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.row() if isinstance(r, ResultRecord) else r)
    return buf.getvalue()


def csv_to_rows(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))
