"""Scenarios, linear functionals, behaviors and quantum strategies.

Indices are 0-based internally.  Outcome ``nz - 1`` is the "remaining"
outcome whose effect is ``I - sum(others)`` in the bundled strategies.
Behaviors are stored as ``p[z, x, y]``, functional coefficients as
``c[x, y, z]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import linalg

PROB_TOL = 1e-9


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class DimensionBound:
    d: int = 2

    def __post_init__(self):
        if self.d < 2:
            raise ValidationError("dimension must be at least 2")


@dataclass(frozen=True)
class DistinguishabilityBound:
    D1: Fraction
    D2: Fraction
    priors: str = "uniform"

    def __post_init__(self):
        if self.priors != "uniform":
            raise ValidationError("only uniform priors are supported")


@dataclass(frozen=True)
class Scenario:
    nx: int
    ny: int
    nz: int
    constraint: DimensionBound | DistinguishabilityBound = field(default_factory=DimensionBound)

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2 or self.nz < 2:
            raise ValidationError(f"degenerate scenario {self.shape}")
        c = self.constraint
        if isinstance(c, DistinguishabilityBound):
            if not (Fraction(1, self.nx) <= Fraction(c.D1) <= 1):
                raise ValidationError(f"D1={c.D1} outside [1/{self.nx}, 1]")
            if not (Fraction(1, self.ny) <= Fraction(c.D2) <= 1):
                raise ValidationError(f"D2={c.D2} outside [1/{self.ny}, 1]")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def is_dimension_bounded(self) -> bool:
        return isinstance(self.constraint, DimensionBound)

    def with_constraint(self, constraint) -> "Scenario":
        return Scenario(self.nx, self.ny, self.nz, constraint)


@dataclass(frozen=True)
class Rhs:
    """Affine right-hand side ``const + d1*D1 + d2*D2``."""

    const: Fraction = Fraction(0)
    d1: Fraction = Fraction(0)
    d2: Fraction = Fraction(0)


@dataclass(frozen=True, eq=False)
class Functional:
    coeffs: np.ndarray  # c[x, y, z]
    rhs: Rhs = Rhs()
    name: str | None = None

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(self.coeffs.shape)

    def check(self, scenario: Scenario) -> None:
        if self.shape != scenario.shape:
            raise ValidationError(f"functional shape {self.shape} does not match scenario {scenario.shape}")
        if scenario.is_dimension_bounded and (self.rhs.d1 or self.rhs.d2):
            raise ValidationError("dimension-bounded functionals cannot depend on D1, D2")

    def reduced(self) -> tuple[np.ndarray, Fraction]:
        """Coefficients on p(z|x,y), z < nz-1, after eliminating the last outcome.

        Returns ``(coeffs[x, y, z<nz-1], shift)`` with
        ``f(p) = sum(coeffs * p_reduced) + shift`` on normalized behaviors.
        """
        c = self.coeffs
        last = c[:, :, -1:]
        shift = sum((v for v in last.ravel().tolist()), Fraction(0))
        return c[:, :, :-1] - last, shift


def functional_from_terms(shape, terms, rhs: Rhs | None = None, name=None) -> Functional:
    """``terms`` holds 1-based ``(x, y, z, c)`` tuples."""
    c = np.zeros(shape, dtype=object)
    c[...] = Fraction(0)
    for x, y, z, v in terms:
        c[x - 1, y - 1, z - 1] += Fraction(v)
    if all(v.denominator == 1 for v in c.ravel()):
        c = c.astype(np.int64)
    return Functional(c, rhs or Rhs(), name)


@dataclass(frozen=True, eq=False)
class Behavior:
    p: np.ndarray  # p[z, x, y]

    def check(self, tol: float = PROB_TOL) -> None:
        p = np.asarray(self.p, dtype=float)
        if p.min() < -tol or p.max() > 1 + tol:
            raise ValidationError("probabilities outside [0, 1]")
        if np.max(np.abs(p.sum(axis=0) - 1)) > tol:
            raise ValidationError("probabilities do not sum to one")


@dataclass(frozen=True, eq=False)
class QuantumStrategy:
    alice_states: Sequence[np.ndarray]
    bob_states: Sequence[np.ndarray]
    povm: Sequence[np.ndarray]

    @property
    def dims(self) -> tuple[int, int]:
        return (self.alice_states[0].shape[0], self.bob_states[0].shape[0])

    def problems(self, tol: float = PROB_TOL) -> list[str]:
        """Human-readable list of invariant violations (empty when valid)."""
        out = []
        for label, states in (("alice", self.alice_states), ("bob", self.bob_states)):
            for i, r in enumerate(states, 1):
                if not linalg.is_hermitian(r, 1e-9):
                    out.append(f"{label} state {i} is not Hermitian")
                    continue
                tr = np.trace(r).real
                if abs(tr - 1) > tol:
                    out.append(f"{label} state {i} has trace {tr:.12g}")
                if linalg.min_eig(r) < -tol:
                    out.append(f"{label} state {i} is not positive semidefinite")
        da, db = self.dims
        n = da * db
        total = np.zeros((n, n), dtype=complex)
        for z, m in enumerate(self.povm, 1):
            if m.shape != (n, n):
                out.append(f"effect {z} has shape {m.shape}, expected {(n, n)}")
                continue
            if not linalg.is_hermitian(m, 1e-9):
                out.append(f"effect {z} is not Hermitian")
                continue
            lo = linalg.min_eig(m)
            if lo < -tol:
                out.append(f"effect {z} has negative eigenvalue {lo:.6g}")
            total = total + m
        dev = np.max(np.abs(total - np.eye(n)))
        if dev > tol:
            out.append(f"effects sum to identity only within {dev:.3g}")
        return out

    def check(self) -> None:
        probs = self.problems()
        if probs:
            raise ValidationError("; ".join(probs))


def _as_array(p):
    return p.p if isinstance(p, Behavior) else np.asarray(p)


def evaluate_functional(f: Functional, b) -> float | Fraction:
    """sum over x, y, z of c[x, y, z] * p[z, x, y]."""
    p = _as_array(b)
    nx, ny, nz = f.shape
    if p.shape != (nz, nx, ny):
        raise ValidationError(f"behavior shape {p.shape} does not match functional {f.shape}")
    if p.dtype == object or f.coeffs.dtype == object:
        return sum((f.coeffs[x, y, z] * p[z, x, y] for x in range(nx) for y in range(ny) for z in range(nz)), Fraction(0))
    return float(np.einsum("xyz,zxy->", f.coeffs, p))


def rhs_value(f: Functional, D1=0, D2=0):
    r = f.rhs
    return r.const + r.d1 * D1 + r.d2 * D2


def behavior_from_strategy(s: QuantumStrategy, check: bool = True) -> Behavior:
    """p(z|x,y) = Tr[(rho_x (x) sigma_y) M_z]."""
    if check:
        s.check()
    A = np.stack(s.alice_states)
    B = np.stack(s.bob_states)
    M = np.stack(s.povm)
    da, db = s.dims
    Mt = M.reshape(len(M), da, db, da, db)
    # Tr[(A (x) B) M] = sum A[i,k] B[j,l] M[(k,l),(i,j)]
    p = np.einsum("xik,yjl,zklij->zxy", A, B, Mt, optimize=True)
    return Behavior(p.real)
