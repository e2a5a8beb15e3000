"""Case 2: G is not precompact.

Fix U with ``G != F U`` for every finite F and V with ``V V^-1`` inside U.
Block n is ``{x_n, g_n x_n}`` for the n-th enumerated element g_n; x_n is the
least-index element whose block, thickened by V, misses every earlier block.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .geometry import PointSet
from .groups import ContractError
from .instances import EscapeWitness, Instance


@dataclass(frozen=True)
class Block:
    g: Any
    x: Any
    gx: Any

    def points(self) -> tuple:
        return (self.x,) if self.x == self.gx else (self.x, self.gx)


@dataclass(frozen=True)
class Case2Trace:
    step: int
    g: Any
    x: Any
    gx: Any


@dataclass(frozen=True)
class Case2State:
    instance: Instance
    witness: EscapeWitness
    blocks: tuple
    thin: bool = False

    @property
    def n(self) -> int:
        return len(self.blocks)

    def points(self) -> list:
        seen, out = set(), []
        for b in self.blocks:
            for p in b.points():
                if p not in seen:
                    seen.add(p)
                    out.append(p)
        return out

    def prefix(self, k: int) -> Case2State:
        return Case2State(self.instance, self.witness, self.blocks[:k], self.thin)


class Case2Engine:
    def __init__(self, instance: Instance, thin: bool = False):
        if instance.precompact or instance.witness is None:
            raise ContractError(f"{instance.name} is precompact; use the Case 1 engine")
        self.instance = instance
        self.group = instance.group
        self.geometry = instance.geometry
        self.witness = instance.witness
        self.thin = thin
        self.blocks: list[Block] = []
        self.points = PointSet()
        self.index = self.geometry.new_index()
        self._scan_start = 0
        self._gs: list = []
        self._excluded: set = set()
        self._excluded_upto = 0

    @property
    def state(self) -> Case2State:
        return Case2State(self.instance, self.witness, tuple(self.blocks), self.thin)

    @classmethod
    def from_state(cls, state: Case2State) -> Case2Engine:
        eng = cls(state.instance, state.thin)
        for b in state.blocks:
            eng._place(b)
        return eng

    def _grow_exclusion(self, upto: int):
        """Exclusion set {g_i a, g_i^-1 a : i <= upto, a in A}."""
        compose, inverse = self.group.compose, self.group.inverse
        for a in self.points.points[self._excluded_upto:]:
            for g in self._gs:
                self._excluded.add(compose(g, a))
                self._excluded.add(compose(inverse(g), a))
        self._excluded_upto = len(self.points)
        while len(self._gs) <= upto:
            g = self.group.element_at(len(self._gs))
            self._gs.append(g)
            gi = inverse(g)
            for a in self.points:
                self._excluded.add(compose(g, a))
                self._excluded.add(compose(gi, a))

    def _blocked(self, t) -> bool:
        if self.thin and t in self._excluded:
            return True
        return self.index.overlaps(self.geometry.cell(t, self.witness.V))

    def _find_x(self, g):
        # candidates blocked on their own never recover: cells and exclusions only grow
        element_at, compose = self.group.element_at, self.group.compose
        i = self._scan_start
        prefix = True
        while True:
            t = element_at(i)
            if self._blocked(t):
                if prefix:
                    self._scan_start = i + 1
                i += 1
                continue
            prefix = False
            gt = compose(g, t)
            if gt != t and self._blocked(gt):
                i += 1
                continue
            return t, gt

    @property
    def covered(self) -> list:
        """Elements the construction claims lie in A A^-1: one g_n per block."""
        return [b.g for b in self.blocks]

    def _place(self, block: Block):
        geo = self.geometry
        self.blocks.append(block)
        for p in block.points():
            self.index.add(geo.cell(p, self.witness.V))
            self.points.add(p)

    def step(self) -> Case2Trace:
        n = len(self.blocks)
        g = self.group.element_at(n)
        if self.thin:
            self._grow_exclusion(n)
        x, gx = self._find_x(g)
        self._place(Block(g, x, gx))
        return Case2Trace(n, g, x, gx)


def init_case2(instance: Instance, thin: bool = False) -> Case2State:
    return Case2Engine(instance, thin).state


def step_case2(state: Case2State) -> Case2State:
    eng = Case2Engine.from_state(state)
    eng.step()
    return eng.state


def run_case2(instance: Instance, steps: int, thin: bool = False):
    if steps < 0:
        raise ContractError("steps must be non-negative")
    eng = Case2Engine(instance, thin)
    traces = [eng.step() for _ in range(steps)]
    return eng.state, traces
