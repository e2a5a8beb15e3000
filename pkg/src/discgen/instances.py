"""Concrete countable groups wired to their geometry.

Case 1 (precompact): Z dense in Z_p, Z dense in the circle (golden rotation).
Case 2 (not precompact): Q with the usual topology, discrete Z, discrete F2.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from .geometry import (POINT, CircleGeometry, DiscreteGeometry, Geometry, LineGeometry,
                       PadicGeometry)
from .groups import ContractError, FreeGroup, Group, IntegerGroup, RationalGroup

INSTANCE_NAMES = ("z-in-zp", "golden-rotation", "q-usual", "z-discrete", "f2-discrete")
MAX_PRIME = 97


class InstanceError(ValueError):
    pass


def is_prime(n: int) -> bool:
    return n >= 2 and all(n % d for d in range(2, int(n ** 0.5) + 1))


@dataclass(frozen=True)
class EscapeWitness:
    """U with G != FU for every finite F, and V with V V^-1 inside U."""

    U: Any
    V: Any


@dataclass(frozen=True)
class Instance:
    name: str
    case: int
    group: Group
    geometry: Geometry
    p: int | None = None
    witness: EscapeWitness | None = None

    @property
    def precompact(self) -> bool:
        return self.case == 1

    def escape(self, finite):
        """Least-index element outside ``F * U``."""
        if self.witness is None:
            raise ContractError(f"{self.name} is precompact; it has no escape witness")
        cells = [self.geometry.cell(f, self.witness.U) for f in finite]
        for _, g in self.group.iter_from(0):
            if not any(self.geometry.contains(c, g) for c in cells):
                return g


def make_instance(name: str, p: int | None = None) -> Instance:
    if name == "z-in-zp":
        if p is None:
            raise InstanceError("z-in-zp needs --p")
        if not is_prime(p):
            raise InstanceError(f"p must be prime, got {p}")
        if p > MAX_PRIME:
            raise InstanceError(f"p must be at most {MAX_PRIME}, got {p}")
        group = IntegerGroup()
        return Instance(name, 1, group, PadicGeometry(p, group), p=p)
    if p is not None:
        raise InstanceError(f"--p does not apply to {name}")
    if name == "golden-rotation":
        group = IntegerGroup()
        return Instance(name, 1, group, CircleGeometry(group))
    if name == "q-usual":
        group = RationalGroup()
        # [-1/2, 1/2] - [-1/2, 1/2] = [-1, 1]
        witness = EscapeWitness(U=Fraction(1), V=Fraction(1, 2))
        return Instance(name, 2, group, LineGeometry(group), witness=witness)
    if name == "z-discrete":
        group = IntegerGroup()
        return Instance(name, 2, group, DiscreteGeometry(group),
                        witness=EscapeWitness(POINT, POINT))
    if name == "f2-discrete":
        group = FreeGroup()
        return Instance(name, 2, group, DiscreteGeometry(group),
                        witness=EscapeWitness(POINT, POINT))
    raise InstanceError(f"unknown instance {name!r}; choose from {', '.join(INSTANCE_NAMES)}")
