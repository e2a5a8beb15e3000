"""Case 1: G dense in a compact group H with Haar measure.

The state after n steps holds pairs ``(x_i, y_i, U_i)`` for i <= n with
``x_0 = y_0 = e``, and the z-list enumerating ``A_n A_n^-1 \\ A_n`` with
neighborhoods ``V_j``.  Each step takes the least-index element g not yet in
``A_n A_n^-1``, finds ``x = g y`` with both points outside every placed cell,
shrinks a shared neighborhood around them and then extends the z-list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .budget import DEFAULT_BUDGET, GeometricBudget
from .geometry import HALF, PointSet, Region
from .groups import ContractError
from .instances import Instance


class InvariantViolation(RuntimeError):
    """The construction reached a state the proof rules out."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


@dataclass(frozen=True)
class Pair:
    x: Any
    y: Any
    size: Any


@dataclass(frozen=True)
class ZEntry:
    z: Any
    size: Any


@dataclass(frozen=True)
class StepTrace:
    step: int
    target_index: int
    target: Any
    x: Any
    y: Any
    size: Any
    z_new: tuple
    step_measure: Fraction
    cumulative: Fraction


@dataclass(frozen=True)
class Case1State:
    instance: Instance
    budget: GeometricBudget
    thin: bool
    pairs: tuple
    zlist: tuple
    m: tuple
    targets: tuple = ()
    covered: frozenset = field(default=frozenset())

    @property
    def n(self) -> int:
        return len(self.pairs) - 1

    def points(self) -> list:
        """A_n without repetition: e first, then x_i, y_i in order."""
        out = [self.pairs[0].x]
        for p in self.pairs[1:]:
            out += [p.x, p.y]
        return out

    def prefix(self, k: int) -> Case1State:
        """The state after the first k steps."""
        mk = self.m[k]
        group = self.instance.group
        pairs = self.pairs[:k + 1]
        pts = [pairs[0].x] + [q for p in pairs[1:] for q in (p.x, p.y)]
        diffs = {group.difference(a, b) for a in pts for b in pts}
        return Case1State(self.instance, self.budget, self.thin, pairs, self.zlist[:mk],
                          self.m[:k + 1], self.targets[:k],
                          frozenset(group.index_of(d) for d in diffs))


class Case1Engine:
    """Deterministic state machine for the precompact construction."""

    def __init__(self, instance: Instance, budget: GeometricBudget = DEFAULT_BUDGET,
                 thin: bool = False):
        if not instance.precompact:
            raise ContractError(f"{instance.name} is not precompact; use the Case 2 engine")
        budget.certify()
        self.instance = instance
        self.group = instance.group
        self.geometry = instance.geometry
        self.budget = budget
        self.thin = thin

        e = self.group.identity
        r0 = budget.r(0)
        u0 = next(s for s in self.geometry.ladder(self.geometry.first_rung_below(r0))
                  if self.geometry.size_measure(s) < r0)
        self.pairs: list[Pair] = [Pair(e, e, u0)]
        self.zlist: list[ZEntry] = []
        self.m: list[int] = [0]
        self.targets: list[int] = []
        self.points = PointSet([e])
        self.diffs: set = {e}
        self.index = self.geometry.new_index()
        self.index.add(self.geometry.cell(e, u0))
        self.cumulative = self.geometry.size_measure(u0)
        self._next_target = 0
        self._scan_start = 0
        self._gs: list = []
        self._excluded: set = set()
        self._excluded_upto = 0  # points already folded into the exclusion set

    # -- snapshots --------------------------------------------------------
    @property
    def state(self) -> Case1State:
        index_of = self.group.index_of
        return Case1State(self.instance, self.budget, self.thin, tuple(self.pairs),
                          tuple(self.zlist), tuple(self.m), tuple(self.targets),
                          frozenset(index_of(d) for d in self.diffs))

    @classmethod
    def from_state(cls, state: Case1State) -> Case1Engine:
        eng = cls(state.instance, state.budget, state.thin)
        geo, group = eng.geometry, eng.group
        eng.pairs = list(state.pairs)
        eng.zlist = list(state.zlist)
        eng.m = list(state.m)
        eng.targets = list(state.targets)
        eng.points = PointSet(state.points())
        eng.diffs = {group.difference(a, b) for a in eng.points for b in eng.points}
        eng.index = geo.new_index()
        eng.index.add(geo.cell(eng.pairs[0].x, eng.pairs[0].size))
        for p in eng.pairs[1:]:
            eng.index.add(geo.cell(p.x, p.size))
            eng.index.add(geo.cell(p.y, p.size))
        for entry in eng.zlist:
            eng.index.add(geo.cell(entry.z, entry.size))
        eng.cumulative = geo.region_measure_bound(eng.index)
        return eng

    def forbidden_region(self) -> Region:
        region = self.index.region()
        if self.geometry.region_measure_bound(region) >= HALF:
            raise InvariantViolation("forbidden region reached measure 1/2")
        return region

    # -- one inductive step -------------------------------------------------
    def _next_uncovered(self):
        element_at = self.group.element_at
        while element_at(self._next_target) in self.diffs:
            self._next_target += 1
        return self._next_target, element_at(self._next_target)

    def _grow_exclusion(self, upto: int):
        """Exclusion set {g_i a, g_i^-1 a : i <= upto, a in A_n}."""
        group = self.group
        compose, inverse = group.compose, group.inverse
        for a in self.points.points[self._excluded_upto:]:
            for g in self._gs:
                self._excluded.add(compose(g, a))
                self._excluded.add(compose(inverse(g), a))
        self._excluded_upto = len(self.points)
        while len(self._gs) <= upto:
            g = group.element_at(len(self._gs))
            self._gs.append(g)
            gi = inverse(g)
            for a in self.points:
                self._excluded.add(compose(g, a))
                self._excluded.add(compose(gi, a))

    def _find_pair(self, g):
        # y blocked by a placed cell or the exclusion set stays blocked forever,
        # so the scan can resume past a fully blocked prefix
        element_at, compose = self.group.element_at, self.group.compose
        covers, excluded = self.index.covers, self._excluded
        i = self._scan_start
        prefix = True
        while True:
            y = element_at(i)
            if y in excluded or covers(y):
                if prefix:
                    self._scan_start = i + 1
                i += 1
                continue
            prefix = False
            x = compose(g, y)
            if x in excluded or covers(x):
                i += 1
                continue
            return x, y

    def step(self) -> StepTrace:
        geo, group = self.geometry, self.group
        n = len(self.pairs) - 1
        target_index, g = self._next_uncovered()
        if self.thin:
            self._grow_exclusion(n + 1)
        x, y = self._find_pair(g)
        size = geo.fit_shared_neighborhood(x, y, self.index, self.budget.r(n + 1))

        self.pairs.append(Pair(x, y, size))
        self.targets.append(target_index)
        self.index.add(geo.cell(x, size))
        self.index.add(geo.cell(y, size))
        new_diffs = []
        for p in (x, y):
            self.points.add(p)
            for a in self.points:
                for d in (group.difference(p, a), group.difference(a, p)):
                    if d not in self.diffs:
                        self.diffs.add(d)
                        new_diffs.append(d)
        z_new = self.extend_z_list(new_diffs)
        step_measure = geo.sum_measures([size, size] + [entry.size for entry in z_new])
        self.cumulative += step_measure
        if self.cumulative >= HALF:
            raise InvariantViolation(f"cumulative measure {self.cumulative} reached 1/2 "
                                     f"at step {n + 1}")
        return StepTrace(n + 1, target_index, g, x, y, size, tuple(z_new), step_measure,
                         self.cumulative)

    def extend_z_list(self, new_diffs) -> list[ZEntry]:
        """Append ``A A^-1 \\ (A u existing z's)`` in enumeration order with fitted V's."""
        geo, index_of = self.geometry, self.group.index_of
        # new differences are never old points or old z's: both lie in the old difference set
        fresh = sorted((d for d in new_diffs if d not in self.points), key=index_of)
        added = []
        avoid = self.points
        for z in fresh:
            j = len(self.zlist)
            entry = ZEntry(z, geo.fit_point_neighborhood(z, avoid, self.budget.r(j)))
            self.zlist.append(entry)
            self.index.add(geo.cell(z, entry.size))
            added.append(entry)
        self.m.append(len(self.zlist))
        return added


def init_case1(instance: Instance, budget: GeometricBudget = DEFAULT_BUDGET,
               thin: bool = False) -> Case1State:
    return Case1Engine(instance, budget, thin).state


def forbidden_region(state: Case1State) -> Region:
    if not state.pairs:
        raise ContractError("state has no initial pair")
    return Case1Engine.from_state(state).forbidden_region()


def step_case1(state: Case1State) -> Case1State:
    eng = Case1Engine.from_state(state)
    eng.step()
    return eng.state


def iter_case1(instance: Instance, steps: int, thin: bool = False,
               budget: GeometricBudget = DEFAULT_BUDGET):
    """Yield ``(engine, trace)`` after each step."""
    eng = Case1Engine(instance, budget, thin)
    for _ in range(steps):
        yield eng, eng.step()


def run_case1(instance: Instance, steps: int, thin: bool = False,
              budget: GeometricBudget = DEFAULT_BUDGET):
    if steps < 0:
        raise ContractError("steps must be non-negative")
    eng = Case1Engine(instance, budget, thin)
    traces = [eng.step() for _ in range(steps)]
    return eng.state, traces
