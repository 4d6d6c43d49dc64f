"""The bundled inequality corpus (facet tables and the named inequalities I1-I6)."""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources

from .formats import parse_inequality
from .model import DimensionBound, DistinguishabilityBound, Functional, Scenario

TABLES = ("table1", "table2", "table3", "table_432", "table4")


@dataclass(frozen=True)
class Entry:
    name: str
    table: str
    row: int
    shape: tuple[int, int, int]
    kind: str  # "dimension" | "distinguishability"
    functional: Functional
    reference: dict  # published values: sc, sq_lower_dN, sq_hierarchy[_dN]

    def scenario(self, d: int = 2, D1=Fraction(2, 3), D2=Fraction(2, 3)) -> Scenario:
        if self.kind == "dimension":
            return Scenario(*self.shape, DimensionBound(d))
        return Scenario(*self.shape, DistinguishabilityBound(Fraction(D1), Fraction(D2)))


# Published values for the named inequalities that are not part of the table rows.
_REFERENCE_EXTRA = {
    "I1": {"sc": 2, "sq_lower_d3": 3.0, "sq_hierarchy_d2": 3.0},
    "I2": {"sc": 2, "sq_hierarchy_d2": 4.0},
    "I3": {"sc": 3},
    "I4": {"sc": 10, "sq_lower_d3": 15.4286, "sq_lower_d4": 20.0, "sq_hierarchy_d2": 16.0, "sq_hierarchy_d3": 20.0},
    "I5": {"sc": 8},
    "I6": {"sc": 5},
}


@lru_cache(maxsize=None)
def _load() -> dict[str, Entry]:
    raw = json.loads(resources.files("mpcomm").joinpath("data/corpus.json").read_text())
    out = {}
    for obj in raw:
        _, f = parse_inequality(obj, name=obj["name"])
        ref = dict(obj.get("reference", {}))
        ref.update(_REFERENCE_EXTRA.get(obj["name"], {}))
        sc = obj["scenario"]
        out[obj["name"]] = Entry(
            obj["name"], obj["table"], obj["row"], (sc["nx"], sc["ny"], sc["nz"]),
            obj["constraint"]["type"], f, ref,
        )
    return out


def names(table: str | None = None) -> list[str]:
    return [e.name for e in _load().values() if table is None or e.table == table]


def get(name: str) -> Entry:
    try:
        return _load()[name]
    except KeyError:
        raise KeyError(f"unknown inequality {name!r}") from None


def entries(table: str | None = None) -> list[Entry]:
    return [e for e in _load().values() if table is None or e.table == table]


def raw_entry(name: str) -> dict:
    raw = json.loads(resources.files("mpcomm").joinpath("data/corpus.json").read_text())
    for obj in raw:
        if obj["name"] == name:
            return obj
    raise KeyError(name)
