"""Independent re-checker for construction traces.

The geometric predicates here are written from scratch against the exact
number layer: p-adic balls by residues mod p^k, circle arcs by signs in
Q(sqrt 5), intervals by rational comparison.  Nothing below calls the
engine's cell tests; the engine is only re-run to compare traces byte for byte.
"""

from __future__ import annotations

import bisect
import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from . import kernels
from .budget import GeometricBudget, parse_budget
from .case1 import Case1State
from .case2 import Case2State
from .exact import PHI, format_rational, parse_rational
from .groups import ContractError, Group, IntegerGroup
from .instances import Instance
from .trace import (ConfigError, TraceFormatError, config_digest, config_from_header,
                    dumps, generate_lines, parse_lines)

CHECKS = ("cover", "disjoint", "z-sep", "budget", "thin")
THIN_K = 30
HALF = Fraction(1, 2)
PASS, FAIL = "pass", "fail"


@dataclass
class Certificate:
    check: str
    stage: int | None
    digest: str
    verdict: str
    values: dict = field(default_factory=dict)
    witness: dict | None = None

    def __post_init__(self):
        if self.verdict == FAIL and not self.witness:
            raise ValueError(f"failing {self.check} certificate needs a witness")

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def to_dict(self) -> dict:
        return {"check": self.check, "stage": self.stage, "digest": self.digest,
                "verdict": self.verdict, "values": self.values, "witness": self.witness}


# ---------------------------------------------------------------------------
# exact predicates, one class per completion family


def exact_sum(values) -> Fraction:
    """Sum of rationals over one common denominator when the largest one works."""
    values = list(values)
    if not values:
        return Fraction(0)
    big = max(v.denominator for v in values)
    if all(big % v.denominator == 0 for v in values):
        return Fraction(sum(v.numerator * (big // v.denominator) for v in values), big)
    return sum(values, Fraction(0))


class _Oracle:
    def __init__(self, group: Group):
        self.group = group

    def measure(self, size) -> Fraction:
        raise ContractError("no Haar measure in this family")

    def hits(self, cells, points):
        """Yield ``(cell_pos, point)`` for every point lying in a cell."""
        for pos, (c, s) in enumerate(cells):
            for a in points:
                if self.contains(c, s, a):
                    yield pos, a

    def overlapping(self, cells):
        """Yield ``(i, j)``, i < j, for every pair of intersecting cells."""
        for i in range(len(cells)):
            ci, si = cells[i]
            for j in range(i + 1, len(cells)):
                cj, sj = cells[j]
                if not self.disjoint(ci, si, cj, sj):
                    yield i, j


class PadicOracle(_Oracle):
    def __init__(self, group, p: int):
        super().__init__(group)
        self.p = p
        self._pow: dict = {}

    def power(self, k: int) -> int:
        q = self._pow.get(k)
        if q is None:
            q = self._pow[k] = self.p ** k
        return q

    def parse(self, text):
        kind, _, value = text.partition(":")
        if kind != "level" or not value.isdigit() or str(int(value)) != value:
            raise ValueError(f"expected level:k, got {text!r}")
        return int(value)

    def measure(self, k):
        return Fraction(1, self.power(k))

    def contains(self, c, k, g):
        return (g - c) % self.power(k) == 0

    def disjoint(self, c1, k1, c2, k2):
        return (c1 - c2) % self.power(min(k1, k2)) != 0

    def hits(self, cells, points):
        pts = set(points)
        if not pts:
            return
        span = max(abs(a) for a in pts)
        residues: dict = {}
        for pos, (c, k) in enumerate(cells):
            q = self.power(k)
            if q > span + abs(c):
                # |a - c| < p^k, so divisibility means equality
                if c in pts:
                    yield pos, c
                continue
            table = residues.get(k)
            if table is None:
                table = residues[k] = {}
                for a in pts:
                    table.setdefault(a % q, a)
            if c % q in table:
                yield pos, table[c % q]


_UNITS = 1 << 64


def golden_units(k: int) -> int:
    """floor(frac(k * phi) * 2^64), exact, with phi = (sqrt 5 - 1) / 2."""
    s = math.isqrt((5 * k * k) << 126)
    if k < 0:
        s = -s - 1
    return (s - (k << 63)) % _UNITS


def golden_distance(k: int):
    """Distance from k * phi to the nearest integer, in Q(sqrt 5)."""
    f = (PHI * k).frac()
    return min(f, 1 - f)


class CircleOracle(_Oracle):
    def parse(self, text):
        kind, _, value = text.partition(":")
        if kind != "radius":
            raise ValueError(f"expected radius:num/den, got {text!r}")
        r = parse_rational(value)
        if r <= 0:
            raise ValueError(f"radius must be positive, got {text!r}")
        return r

    def measure(self, r):
        return min(2 * r, Fraction(1))

    @staticmethod
    def _gap(u1, u2):
        d = (u1 - u2) % _UNITS
        return min(d, _UNITS - d)

    def _within(self, k, gap, bound: Fraction) -> bool:
        """Is the arc distance of k*phi at most ``bound``?  ``gap`` estimates it to 1 unit."""
        # the true distance lies strictly within one unit of the estimate
        if (gap - 1) * bound.denominator > bound.numerator * _UNITS:
            return False
        if (gap + 1) * bound.denominator < bound.numerator * _UNITS:
            return True
        return not (golden_distance(k) > bound)

    def contains(self, c, r, g):
        return self._within(g - c, self._gap(golden_units(g), golden_units(c)), r)

    def disjoint(self, c1, r1, c2, r2):
        return not self._within(c1 - c2, self._gap(golden_units(c1), golden_units(c2)),
                                r1 + r2)

    def hits(self, cells, points):
        keyed = sorted((golden_units(a), a) for a in points)
        keys = [k for k, _ in keyed]
        n = len(keys)
        if not n:
            return
        for pos, (c, r) in enumerate(cells):
            uc = golden_units(c)
            reach = -(-r.numerator * _UNITS // r.denominator) + 2
            if 2 * reach >= _UNITS:
                window = range(n)
            else:
                lo = bisect.bisect_left(keys, (uc - reach) % _UNITS)
                hi = bisect.bisect_right(keys, (uc + reach) % _UNITS)
                window = range(lo, hi) if lo <= hi else list(range(lo, n)) + list(range(hi))
            for i in window:
                u, a = keyed[i]
                if self._within(a - c, self._gap(u, uc), r):
                    yield pos, a

    def overlapping(self, cells):
        units = [golden_units(c) for c, _ in cells]
        for i in range(len(cells)):
            ci, ri = cells[i]
            for j in range(i + 1, len(cells)):
                cj, rj = cells[j]
                if self._within(ci - cj, self._gap(units[i], units[j]), ri + rj):
                    yield i, j


class LineOracle(_Oracle):
    parse = CircleOracle.parse

    def contains(self, c, r, g):
        return abs(Fraction(g) - c) <= r

    def disjoint(self, c1, r1, c2, r2):
        return abs(c1 - c2) > r1 + r2

    def hits(self, cells, points):
        pts = sorted(points)
        for pos, (c, r) in enumerate(cells):
            i = bisect.bisect_left(pts, c - r)
            while i < len(pts) and pts[i] <= c + r:
                yield pos, pts[i]
                i += 1

    def overlapping(self, cells):
        if not cells:
            return
        order = sorted(range(len(cells)), key=lambda i: cells[i][0])
        widest = max(r for _, r in cells)
        for a, i in enumerate(order):
            ci, ri = cells[i]
            for j in order[a + 1:]:
                cj, rj = cells[j]
                if cj - ci > ri + widest:
                    break
                if not self.disjoint(ci, ri, cj, rj):
                    yield min(i, j), max(i, j)


class DiscreteOracle(_Oracle):
    def parse(self, text):
        if text != "point":
            raise ValueError(f"expected point, got {text!r}")
        return "point"

    def contains(self, c, s, g):
        return c == g

    def disjoint(self, c1, s1, c2, s2):
        return c1 != c2

    def hits(self, cells, points):
        pts = set(points)
        for pos, (c, _) in enumerate(cells):
            if c in pts:
                yield pos, c

    def overlapping(self, cells):
        seen: dict = {}
        for j, (c, _) in enumerate(cells):
            for i in seen.get(c, ()):
                yield i, j
            seen.setdefault(c, []).append(j)


def oracle_for(instance: Instance) -> _Oracle:
    family = instance.geometry.family
    if family == "padic":
        return PadicOracle(instance.group, instance.p)
    if family == "circle":
        return CircleOracle(instance.group)
    if family == "line":
        return LineOracle(instance.group)
    return DiscreteOracle(instance.group)


# ---------------------------------------------------------------------------
# trace-derived state


@dataclass
class TraceView:
    """What a trace (or an engine snapshot) says was built, stage by stage.

    Stage s is the s-th record after the header; the header/init is stage 0.
    """

    instance: Instance
    thin: bool = False
    budget: GeometricBudget | None = None
    pairs: list = field(default_factory=list)    # (x, y, size); pairs[0] = (e, e, U0)
    zlist: list = field(default_factory=list)    # (z, size, stage)
    targets: list = field(default_factory=list)  # (index, element) per Case 1 stage
    ledger: list = field(default_factory=list)   # (step, cumulative) raw strings
    init_measure: str | None = None
    blocks: list = field(default_factory=list)   # (g, x, gx)
    digest: str = ""

    @property
    def case(self) -> int:
        return self.instance.case

    @property
    def stages(self) -> int:
        return len(self.pairs) - 1 if self.case == 1 else len(self.blocks)

    def points_staged(self) -> list:
        """``(point, stage introduced)`` in order, without repetition."""
        out, seen = [], set()

        def put(p, s):
            if p not in seen:
                seen.add(p)
                out.append((p, s))

        if self.case == 1:
            for s, (x, y, _) in enumerate(self.pairs):
                put(x, s)
                put(y, s)
        else:
            for s, (_, x, gx) in enumerate(self.blocks, 1):
                put(x, s)
                put(gx, s)
        return out

    def points(self) -> list:
        return [p for p, _ in self.points_staged()]

    def prefix(self, k: int) -> TraceView:
        if self.case == 1:
            return TraceView(self.instance, self.thin, self.budget, self.pairs[:k + 1],
                             [z for z in self.zlist if z[2] <= k], self.targets[:k],
                             self.ledger[:k], self.init_measure, [], self.digest)
        return TraceView(self.instance, self.thin, None, [], [], [], [], None,
                         self.blocks[:k], self.digest)


def _snapshot_digest(instance: Instance, payload) -> str:
    return hashlib.sha256(repr((instance.name, instance.p, payload)).encode()).hexdigest()


def as_view(state) -> TraceView:
    """Accept a TraceView or an engine snapshot."""
    if isinstance(state, TraceView):
        return state
    if isinstance(state, Case1State):
        inst = state.instance
        zl, m = [], state.m
        for s in range(1, len(m)):
            zl += [(z.z, z.size, s) for z in state.zlist[m[s - 1]:m[s]]]
        view = TraceView(inst, state.thin, state.budget,
                         [(p.x, p.y, p.size) for p in state.pairs], zl,
                         [(i, inst.group.element_at(i)) for i in state.targets])
        view.digest = _snapshot_digest(inst, (view.pairs, view.zlist))
        return view
    if isinstance(state, Case2State):
        inst = state.instance
        view = TraceView(inst, state.thin, blocks=[(b.g, b.x, b.gx) for b in state.blocks])
        view.digest = _snapshot_digest(inst, view.blocks)
        return view
    raise ContractError(f"cannot verify a {type(state).__name__}")


def _cert(check, view, failure, values, stage=None) -> Certificate:
    """``failure`` is None or ``(stage, witness)``."""
    if failure is None:
        return Certificate(check, stage if stage is not None else view.stages, view.digest,
                           PASS, values)
    return Certificate(check, failure[0], view.digest, FAIL, values, failure[1])


# ---------------------------------------------------------------------------
# checks


def brute_difference_set(elements, group: Group) -> set:
    """``{a * b^-1}`` over all ordered pairs."""
    elements = list(elements)
    if isinstance(group, IntegerGroup):
        return set(kernels.int_difference_set(elements))
    return {group.difference(a, b) for a in elements for b in elements}


def check_cover(state, k: int) -> Certificate:
    """g_0 ... g_k all lie in A A^-1 for the current A."""
    view = as_view(state)
    group = view.instance.group
    if k < 0:
        raise ContractError("k must be non-negative")
    diffs = brute_difference_set(view.points(), group)
    for i in range(k + 1):
        g = group.element_at(i)
        if g not in diffs:
            return _cert("cover", view, (view.stages, {"index": i, "g": group.encode(g)}),
                         {"k": k, "differences": len(diffs)})
    return _cert("cover", view, None, {"k": k, "differences": len(diffs)})


def _check_cover_stages(view: TraceView) -> Certificate:
    """Per stage: the target is the least uncovered element and g_s is covered."""
    group = view.instance.group
    enc = group.encode
    diffs: set = set()
    pts: list = []

    def add(p):
        if p in seen:
            return
        seen.add(p)
        pts.append(p)
        for a in pts:
            diffs.add(group.difference(p, a))
            diffs.add(group.difference(a, p))

    seen: set = set()
    if view.case == 1:
        add(view.pairs[0][0])
        nxt = 0
        for s in range(1, len(view.pairs)):
            x, y, _ = view.pairs[s]
            idx, target = view.targets[s - 1]
            while group.element_at(nxt) in diffs:
                nxt += 1
            if idx != nxt or target != group.element_at(nxt):
                return _cert("cover", view, (s, {"claimed_index": idx, "claimed": enc(target),
                                                  "least_uncovered_index": nxt}), {})
            if group.difference(x, y) != target:
                return _cert("cover", view, (s, {"x": enc(x), "y": enc(y),
                                                  "target": enc(target)}), {})
            add(x)
            add(y)
            if group.element_at(s) not in diffs:
                return _cert("cover", view, (s, {"index": s, "g": enc(group.element_at(s))}), {})
        final = check_cover(view, view.stages)
    else:
        for s, (g, x, gx) in enumerate(view.blocks, 1):
            if g != group.element_at(s - 1) or gx != group.compose(g, x) \
                    or group.difference(gx, x) != g:
                return _cert("cover", view, (s, {"g": enc(g), "x": enc(x), "gx": enc(gx),
                                                  "expected_g": enc(group.element_at(s - 1))}),
                             {})
        if not view.blocks:
            return _cert("cover", view, None, {"k": -1})
        final = check_cover(view, view.stages - 1)
    return final


def _case1_cells(view: TraceView) -> list:
    """``(center, size, stage, label)`` for every x_i U_i and y_i U_i."""
    e, _, u0 = view.pairs[0]
    cells = [(e, u0, 0, "x0")]
    for i, (x, y, u) in enumerate(view.pairs[1:], 1):
        cells += [(x, u, i, f"x{i}"), (y, u, i, f"y{i}")]
    return cells


def check_disjointness(state) -> Certificate:
    view = as_view(state)
    oracle = oracle_for(view.instance)
    enc = view.instance.group.encode
    if view.case == 1:
        cells = _case1_cells(view)
        exempt = lambda i, j: False  # noqa: E731
    else:
        cells = []
        for s, (_, x, gx) in enumerate(view.blocks, 1):
            V = view.instance.witness.V
            cells.append((x, V, s, f"x{s - 1}"))
            if gx != x:
                cells.append((gx, V, s, f"gx{s - 1}"))
        exempt = lambda i, j: cells[i][2] == cells[j][2]  # noqa: E731
    worst = None
    for i, j in oracle.overlapping([(c, s) for c, s, _, _ in cells]):
        if exempt(i, j):
            continue
        stage = max(cells[i][2], cells[j][2])
        if worst is None or stage < worst[0]:
            a, b = cells[i], cells[j]
            worst = (stage, {"cells": [a[3], b[3]], "centers": [enc(a[0]), enc(b[0])],
                             "sizes": [str(a[1]), str(b[1])]})
    return _cert("disjoint", view, worst, {"cells": len(cells)})


def check_z_separation(state) -> Certificate:
    """Every z_j V_j misses the final A (4), mu(V_j) < r_j (5), and the z-list is
    exactly A A^-1 minus A, extended in enumeration order at each stage.

    Each condition is checked on its own; the witness names every failing one
    and the certificate's stage is the earliest failure.
    """
    view = as_view(state)
    if view.case != 1:
        raise ContractError("z-separation applies to Case 1 states")
    group, oracle = view.instance.group, oracle_for(view.instance)
    enc = group.encode
    values = {"z": len(view.zlist)}
    found: dict = {}

    for j, (z, size, s) in enumerate(view.zlist):
        mu, r = oracle.measure(size), view.budget.r(j)
        if not mu < r:
            found["measure"] = (s, {"j": j, "z": enc(z), "measure": format_rational(mu),
                                    "r": format_rational(r)})
            break

    intro = dict(view.points_staged())
    cells = [(z, size) for z, size, _ in view.zlist]
    for pos, a in oracle.hits(cells, intro):
        stage = max(view.zlist[pos][2], intro[a])
        if "avoid" not in found or stage < found["avoid"][0]:
            found["avoid"] = (stage, {"j": pos, "z": enc(view.zlist[pos][0]),
                                      "point": enc(a)})

    # only a difference that is new at stage s can be a new z there
    diffs: set = set()
    pts: list = []
    placed: set = set()
    zs: set = set()
    by_stage = Counter(s for _, _, s in view.zlist)
    pos = 0
    for s, (x, y, _) in enumerate(view.pairs):
        fresh = []
        for p in (x, y):
            if p not in placed:
                placed.add(p)
                pts.append(p)
                for a in pts:
                    for d in (group.difference(p, a), group.difference(a, p)):
                        if d not in diffs:
                            diffs.add(d)
                            fresh.append(d)
        if s == 0:
            continue
        expected = sorted((d for d in fresh if d not in zs and intro.get(d, s + 1) > s),
                          key=group.index_of)
        got = [z for z, _, _ in view.zlist[pos:pos + by_stage[s]]]
        if got != expected:
            found["z-list"] = (s, {"missing": [enc(d) for d in expected if d not in got][:5],
                                   "unexpected": [enc(d) for d in got if d not in expected][:5],
                                   "expected_count": len(expected), "found_count": len(got)})
            break
        zs.update(got)
        pos += by_stage[s]

    if not found:
        return _cert("z-sep", view, None, values)
    stage = min(st for st, _ in found.values())
    return _cert("z-sep", view, (stage, {k: w for k, (_, w) in found.items()}), values)


def check_budget(state) -> Certificate:
    """Exact measure ledger: every cell below its budget term, total below 1/2."""
    view = as_view(state)
    if view.case != 1:
        raise ContractError("the measure budget applies to Case 1 states")
    oracle = oracle_for(view.instance)
    budget = view.budget
    bound = 3 * budget.certify()
    values: dict = {}
    if not view.pairs:
        return _cert("budget", view, None, {"total": "0/1", "bound": format_rational(bound)})
    for i, (_, _, u) in enumerate(view.pairs):
        mu = oracle.measure(u)
        if not mu < budget.r(i):
            return _cert("budget", view, (i, {"pair": i, "measure": format_rational(mu),
                                              "r": format_rational(budget.r(i))}), values)
    total = oracle.measure(view.pairs[0][2])
    if view.init_measure is not None and view.init_measure != format_rational(total):
        return _cert("budget", view, (0, {"ledger": view.init_measure,
                                          "recomputed": format_rational(total)}), values)
    zpos = 0
    for s in range(1, len(view.pairs)):
        u = view.pairs[s][2]
        terms = [oracle.measure(u)] * 2
        while zpos < len(view.zlist) and view.zlist[zpos][2] == s:
            terms.append(oracle.measure(view.zlist[zpos][1]))
            zpos += 1
        step = exact_sum(terms)
        total += step
        if s <= len(view.ledger):
            got = view.ledger[s - 1]
            want = (format_rational(step), format_rational(total))
            if tuple(got) != want:
                field_name = "step" if got[0] != want[0] else "cumulative"
                return _cert("budget", view, (s, {"field": field_name,
                                                  "ledger": got[0 if field_name == "step" else 1],
                                                  "recomputed": want[0 if field_name == "step"
                                                                     else 1]}), values)
        if total >= HALF:
            return _cert("budget", view, (s, {"cumulative": format_rational(total)}), values)
    values["total"] = format_rational(total)
    values["bound"] = format_rational(bound)
    if total > bound:
        return _cert("budget", view, (view.stages, {"total": values["total"]}), values)
    return _cert("budget", view, None, values)


def pair_counts(elements, group: Group, gs) -> list[int]:
    """For each g, ``|{(a, b) in A^2 : b a^-1 = g}|`` by brute force."""
    elements = list(dict.fromkeys(elements))
    if isinstance(group, IntegerGroup):
        return list(kernels.int_pair_counts(elements, list(gs)))
    out = []
    for g in gs:
        out.append(sum(1 for a in elements for b in elements if group.difference(b, a) == g))
    return out


def check_thin(state1, state2, g) -> Certificate:
    """Count stabilization of pairs with difference g between two stages."""
    v1, v2 = as_view(state1), as_view(state2)
    group = v2.instance.group
    if g == group.identity:
        raise ContractError("thinness concerns g != e only")
    if v2.stages < 2 * v1.stages:
        raise ContractError("second stage must be at least twice the first")
    c1, c2 = (pair_counts(v.points(), group, [g])[0] for v in (v1, v2))
    values = {"g": group.encode(g), "n1": v1.stages, "n2": v2.stages,
              "count1": c1, "count2": c2, "thin": v2.thin}
    failure = None if c1 == c2 else (v2.stages, {"g": group.encode(g), "count1": c1,
                                                 "count2": c2})
    return _cert("thin", v2, failure, values)


def check_thin_family(state, k: int = THIN_K, n1: int | None = None) -> Certificate:
    """Stabilization for the first k enumerated g != e between stage n1 and the end."""
    view = as_view(state)
    group = view.instance.group
    n1 = view.stages // 2 if n1 is None else n1
    early = view.prefix(n1)
    gs = [group.element_at(i) for i in range(1, k + 1)]
    c1 = pair_counts(early.points(), group, gs)
    c2 = pair_counts(view.points(), group, gs)
    grew = [(g, a, b) for g, a, b in zip(gs, c1, c2) if a != b]
    values = {"n1": n1, "n2": view.stages, "k": k, "thin": view.thin,
              "changed": len(grew), "count2_total": sum(c2)}
    failure = None
    if grew:
        g, a, b = grew[0]
        failure = (view.stages, {"g": group.encode(g), "count1": a, "count2": b})
    return _cert("thin", view, failure, values)


# ---------------------------------------------------------------------------
# trace decoding and full verification


def _field(rec, key, line):
    if key not in rec:
        raise TraceFormatError(f"record lacks {key!r}", line)
    return rec[key]


def _element(group, text, line):
    if not isinstance(text, str):
        raise TraceFormatError(f"element must be a string, got {text!r}", line)
    try:
        return group.decode(text)
    except (ValueError, ContractError) as exc:
        raise TraceFormatError(str(exc), line) from None


def _size(oracle, cell, group, line):
    if not isinstance(cell, dict) or set(cell) != {"center", "size"}:
        raise TraceFormatError(f"malformed cell {cell!r}", line)
    if cell["center"] != group.encode(group.identity):
        raise TraceFormatError("neighborhood cells must be centred at the identity", line)
    try:
        return oracle.parse(cell["size"])
    except (ValueError, AttributeError) as exc:
        raise TraceFormatError(str(exc), line) from None


def decode_view(header: dict, records: list[dict], instance: Instance) -> TraceView:
    group, oracle = instance.group, oracle_for(instance)
    view = TraceView(instance, bool(header["thin"]), digest=header["digest"])
    if instance.precompact:
        view.budget = parse_budget(header["budget"])
        init = header.get("init")
        if not isinstance(init, dict):
            raise TraceFormatError("Case 1 header lacks init", 1)
        e = group.identity
        if _element(group, init.get("x"), 1) != e or _element(group, init.get("y"), 1) != e:
            raise TraceFormatError("initial pair must be (e, e)", 1)
        view.pairs.append((e, e, _size(oracle, init.get("U"), group, 1)))
        view.init_measure = init.get("measure")
    for ordinal, rec in enumerate(records, 1):
        line = ordinal + 1
        step = _field(rec, "step", line)
        expected = ordinal if instance.precompact else ordinal - 1
        if step != expected:
            raise TraceFormatError(f"expected step {expected}, found {step!r} "
                                   "(records reordered or missing)", line)
        if _field(rec, "case", line) != instance.case:
            raise TraceFormatError("case does not match header", line)
        if instance.precompact:
            idx = _field(rec, "target_index", line)
            if not isinstance(idx, int) or isinstance(idx, bool) or idx < 0:
                raise TraceFormatError(f"bad target_index {idx!r}", line)
            view.targets.append((idx, _element(group, _field(rec, "target", line), line)))
            x = _element(group, _field(rec, "x", line), line)
            y = _element(group, _field(rec, "y", line), line)
            view.pairs.append((x, y, _size(oracle, _field(rec, "U", line), group, line)))
            z_new = _field(rec, "z_new", line)
            if not isinstance(z_new, list):
                raise TraceFormatError("z_new must be a list", line)
            for entry in z_new:
                if not isinstance(entry, dict):
                    raise TraceFormatError("malformed z entry", line)
                view.zlist.append((_element(group, _field(entry, "z", line), line),
                                   _size(oracle, _field(entry, "V", line), group, line),
                                   ordinal))
            meas = _field(rec, "measures", line)
            if not isinstance(meas, dict) or not {"step", "cumulative"} <= set(meas):
                raise TraceFormatError("malformed measures", line)
            view.ledger.append((meas["step"], meas["cumulative"]))
        else:
            view.blocks.append(tuple(_element(group, _field(rec, k, line), line)
                                     for k in ("g", "x", "gx")))
    return view


def _header_stage_cert(check, digest, stage, witness, values=None) -> Certificate:
    return Certificate(check, stage, digest, FAIL, values or {}, witness)


def verify_trace(lines: list[str], instance: Instance | None = None, checks=None,
                 replay: bool = True, truncated_at: int | None = None) -> list[Certificate]:
    """Replay and re-check a trace given as lines; never raises on bad input."""
    certs: list[Certificate] = []
    try:
        header, records = parse_lines(lines)
    except TraceFormatError as exc:
        stage = None if exc.line is None else max(exc.line - 1, 0)
        return [_header_stage_cert("format", "", stage, {"error": str(exc)})]
    digest = header["digest"] if isinstance(header.get("digest"), str) else ""

    if config_digest(header) != digest:
        return [_header_stage_cert("header", digest, 0,
                                   {"error": "config digest does not match header fields"})]
    try:
        config = config_from_header(header)
        inst = config.validate()
    except (ConfigError, TraceFormatError) as exc:
        return [_header_stage_cert("header", digest, 0, {"error": str(exc)})]
    if instance is not None and (instance.name, instance.p) != (inst.name, inst.p):
        return [_header_stage_cert("header", digest, 0,
                                   {"error": f"trace is for {inst.name}, expected {instance.name}"})]
    if header["case"] != inst.case or header["enum"] != inst.group.enumeration:
        return [_header_stage_cert("header", digest, 0,
                                   {"error": "case or enumeration does not match the instance"})]
    certs.append(Certificate("header", 0, digest, PASS, {"instance": inst.name, "p": inst.p,
                                                         "steps": header["steps"]}))
    if truncated_at is not None:
        certs.append(_header_stage_cert("structure", digest, max(truncated_at - 1, 0),
                                        {"error": "truncated final record"}))
        return certs
    try:
        view = decode_view(header, records, inst)
    except TraceFormatError as exc:
        stage = None if exc.line is None else exc.line - 1
        certs.append(_header_stage_cert("structure", digest, stage, {"error": str(exc)}))
        return certs
    if len(records) != header["steps"]:
        certs.append(_header_stage_cert("structure", digest, len(records) + 1,
                                        {"error": f"header promises {header['steps']} records, "
                                                  f"found {len(records)}"}))
        return certs
    certs.append(Certificate("structure", view.stages, digest, PASS, {"records": len(records)}))

    if replay:
        certs.append(_replay(config, lines, digest))

    selected = list(CHECKS if checks is None else checks)
    for name in selected:
        if name not in CHECKS:
            raise ContractError(f"unknown check {name!r}")
        if name == "cover":
            certs.append(_check_cover_stages(view))
        elif name == "disjoint":
            certs.append(check_disjointness(view))
        elif name == "z-sep" and view.case == 1:
            certs.append(check_z_separation(view))
        elif name == "budget" and view.case == 1:
            certs.append(check_budget(view))
        elif name == "thin" and (view.thin or checks is not None) and view.stages >= 2:
            certs.append(check_thin_family(view))
    return certs


def _replay(config, lines, digest) -> Certificate:
    stage = 0
    for stage, (want, got) in enumerate(zip(generate_lines(config), lines)):
        if want != got:
            return _header_stage_cert("replay", digest, stage,
                                      {"error": "record differs from the deterministic replay",
                                       "record": stage})
    return Certificate("replay", stage, digest, PASS, {"records": len(lines)})


def split_text(text: str) -> tuple[list[str], int | None]:
    """Lines of a trace and the 1-based line number of a truncated tail, if any."""
    if text and not text.endswith("\n"):
        lines = text.split("\n")
        return lines[:-1], len(lines)
    return (text.split("\n")[:-1] if text else []), None


def verify_text(text: str, **kw) -> list[Certificate]:
    lines, truncated = split_text(text)
    return verify_trace(lines, truncated_at=truncated, **kw)


# ---------------------------------------------------------------------------
# built-in mutation suite


def _mutable(lines: list[str]):
    header = json.loads(lines[0])
    records = [json.loads(x) for x in lines[1:]]
    return header, records


def _target_record(records, pick=lambda r: True):
    mid = len(records) // 2
    for rec in records[mid:] + records[:mid]:
        if pick(rec):
            return rec
    return None


def _bump_element(group, text):
    return group.encode(group.element_at(group.index_of(group.decode(text)) + 1))


def _mutate_records(text, fn, pick=lambda r: True):
    lines, _ = split_text(text)
    header, records = _mutable(lines)
    rec = _target_record(records, pick)
    if rec is None:
        return None
    fn(header, rec)
    return "".join(dumps(r) + "\n" for r in [header] + records)


def mutate(name: str, text: str, instance: Instance) -> str | None:
    """Apply one named mutation; None when it does not apply to this trace."""
    group = instance.group
    case1 = instance.precompact
    lines, _ = split_text(text)
    if len(lines) < 3:
        return None
    if name == "center":
        return _mutate_records(text, lambda h, r: r.update(x=_bump_element(group, r["x"])))
    if name == "size":
        if not case1:
            return None

        def grow(h, r):
            kind, _, value = r["U"]["size"].partition(":")
            if kind == "level":
                r["U"]["size"] = f"level:{int(value) - 1}"
            else:
                r["U"]["size"] = "radius:" + format_rational(parse_rational(value) * 2)
        return _mutate_records(text, grow)
    if name == "measure":
        if not case1:
            return None

        def flip(h, r):
            q = parse_rational(r["measures"]["step"])
            r["measures"]["step"] = format_rational(q + Fraction(1, q.denominator))
        return _mutate_records(text, flip)
    if name == "drop-z":
        if not case1:
            return None
        return _mutate_records(text, lambda h, r: r["z_new"].pop(), lambda r: r["z_new"])
    if name == "z-center":
        if not case1:
            return None

        def shift(h, r):
            r["z_new"][0]["z"] = _bump_element(group, r["z_new"][0]["z"])
        return _mutate_records(text, shift, lambda r: r["z_new"])
    if name == "reorder":
        k = len(lines) // 2
        lines = list(lines)
        lines[k], lines[k + 1] = lines[k + 1], lines[k]
        return "".join(x + "\n" for x in lines)
    if name == "truncate":
        last = lines[-1]
        return "".join(x + "\n" for x in lines[:-1]) + last[:len(last) // 2]
    if name == "header":
        header, records = _mutable(lines)
        header["thin"] = not header["thin"]
        return "".join(dumps(r) + "\n" for r in [header] + records)
    if name == "coverage":
        if case1:
            def retarget(h, r):
                r["target_index"] += 1
                r["target"] = group.encode(group.element_at(r["target_index"]))
            return _mutate_records(text, retarget)
        return _mutate_records(text, lambda h, r: r.update(g=_bump_element(group, r["g"])))
    raise ContractError(f"unknown mutation {name!r}")


MUTATIONS = ("center", "size", "measure", "drop-z", "z-center", "reorder", "truncate",
             "header", "coverage")


@dataclass(frozen=True)
class MutationResult:
    name: str
    applied: bool
    rejected: bool
    check: str | None = None
    stage: int | None = None


def run_mutation_suite(text: str, instance: Instance, names=MUTATIONS) -> list[MutationResult]:
    """Mutate a clean trace each way and report which check rejects it."""
    out = []
    for name in names:
        mutated = mutate(name, text, instance)
        if mutated is None:
            out.append(MutationResult(name, False, False))
            continue
        certs = verify_text(mutated)
        bad = next((c for c in certs if not c.passed), None)
        out.append(MutationResult(name, True, bad is not None,
                                  bad.check if bad else None, bad.stage if bad else None))
    return out


def summarize(certs: list[Certificate]) -> str:
    rows = [("check", "stage", "verdict", "detail")]
    for c in certs:
        detail = c.witness if not c.passed else c.values
        rows.append((c.check, "-" if c.stage is None else str(c.stage), c.verdict,
                     json.dumps(detail, separators=(",", ":"))[:80]))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    return "\n".join(f"{r[0]:<{widths[0]}}  {r[1]:>{widths[1]}}  {r[2]:<{widths[2]}}  {r[3]}"
                     for r in rows)

