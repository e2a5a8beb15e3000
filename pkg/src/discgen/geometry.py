"""Cells, regions and exact Haar-measure bookkeeping in the completion H.

H itself is never built.  A cell is a translate ``center * U`` of a basic
closed neighborhood U of the identity, recorded as ``(center, size)``; all
predicates reduce to exact arithmetic on the center and the size parameter.

Size parameters per family:

* ``PadicGeometry``: an integer level k, the ball ``c + p^k Z_p``;
  Haar measure ``p^-k``.
* ``CircleGeometry``: a rational radius r, the closed arc of radius r around
  ``frac(n * phi)``; measure ``min(2r, 1)``.
* ``LineGeometry``: a rational radius r, the closed interval ``[c - r, c + r]``
  in Q (not precompact, no measure).
* ``DiscreteGeometry``: the single size ``POINT``; a cell is ``{c}``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from typing import Any

from . import kernels
from .exact import floor_sqrt5_multiple, format_rational, parse_rational
from .groups import ContractError, Group, IntegerGroup

POINT = "point"
HALF = Fraction(1, 2)


@dataclass(frozen=True)
class Cell:
    center: Any
    size: Any


@dataclass(frozen=True)
class Region:
    cells: tuple = ()

    def __iter__(self):
        return iter(self.cells)

    def __len__(self):
        return len(self.cells)

    def with_cell(self, cell: Cell) -> Region:
        return Region(self.cells + (cell,))


def min_exponent_below(base: int, bound) -> int:
    """Least k >= 0 with ``base**-k < bound``."""
    bound = Fraction(bound)
    if bound <= 0:
        raise ContractError(f"bound must be positive, got {bound}")
    num, den = bound.numerator, bound.denominator
    if num > den:
        return 0
    if base == 2 and num == 1 and den & (den - 1) == 0:
        return den.bit_length()   # 2**-k < 2**-m  iff  k >= m + 1
    # float only seeds the search; the loops below settle k exactly
    k = max(0, int((den.bit_length() - num.bit_length()) / math.log2(base)) - 2)
    while base ** k * num <= den:
        k += 1
    while k > 0 and base ** (k - 1) * num > den:
        k -= 1
    return k


def power_sum(base: int, exponents) -> Fraction:
    """Exact sum of ``base**-k`` over the exponents (one normalization at the end)."""
    exps = sorted(exponents)
    if not exps:
        return Fraction(0)
    acc, prev = 0, exps[0]
    for k in exps:
        acc = acc * base ** (k - prev) + 1
        prev = k
    return Fraction(acc, base ** prev)


class Geometry:
    """Shared behaviour; subclasses supply the exact predicates."""

    precompact = False
    family = "abstract"

    def __init__(self, group: Group):
        self.group = group

    # -- predicates -----------------------------------------------------
    def cell(self, center, size) -> Cell:
        return Cell(center, size)

    def contains(self, cell: Cell, g) -> bool:
        raise NotImplementedError

    def cells_disjoint(self, c1: Cell, c2: Cell) -> bool:
        raise NotImplementedError

    def size_measure(self, size) -> Fraction:
        raise ContractError(f"{self.family} geometry carries no Haar measure")

    def cell_measure(self, cell: Cell) -> Fraction:
        return self.size_measure(cell.size)

    def sum_measures(self, sizes) -> Fraction:
        return sum((self.size_measure(s) for s in sizes), Fraction(0))

    def size_gauge(self, size) -> Fraction:
        """Quantity compared against fitting bounds (the measure, if any)."""
        return self.size_measure(size)

    def ladder(self, start: int = 0):
        """Canonical sizes, largest first."""
        raise NotImplementedError

    def first_rung_below(self, bound) -> int:
        return 0

    def encode_size(self, size) -> str:
        raise NotImplementedError

    def decode_size(self, text: str):
        raise NotImplementedError

    def separation(self, a, b):
        if a == b:
            raise ContractError("separation needs distinct points")
        for size in self.ladder():
            if self.cells_disjoint(self.cell(a, size), self.cell(b, size)):
                return size

    def new_index(self) -> CellIndex:
        return CellIndex(self)

    # -- regions --------------------------------------------------------
    def region_contains(self, region, g) -> bool:
        covers = getattr(region, "covers", None)
        if covers is not None:
            return covers(g)
        return any(self.contains(c, g) for c in region)

    def region_overlaps(self, region, cell) -> bool:
        overlaps = getattr(region, "overlaps", None)
        if overlaps is not None:
            return overlaps(cell)
        return any(not self.cells_disjoint(cell, c) for c in region)

    def region_measure_bound(self, region) -> Fraction:
        return self.sum_measures(c.size for c in region)

    # -- neighborhood fitting -------------------------------------------
    def fit_shared_neighborhood(self, x, y, forbidden, bound):
        if x == y:
            raise ContractError("fit_shared_neighborhood needs x != y")
        if self.region_contains(forbidden, x) or self.region_contains(forbidden, y):
            raise ContractError("points must lie outside the forbidden region")
        for size in self.ladder(self.first_rung_below(bound)):
            if self.size_gauge(size) >= bound:
                continue
            cx, cy = self.cell(x, size), self.cell(y, size)
            if not self.cells_disjoint(cx, cy):
                continue
            if not self.region_overlaps(forbidden, cx) and not self.region_overlaps(forbidden, cy):
                return size

    def fit_point_neighborhood(self, z, avoid, bound):
        avoid = list(avoid)
        if z in avoid:
            raise ContractError("z must not be one of the avoided points")
        for size in self.ladder(self.first_rung_below(bound)):
            if self.size_gauge(size) >= bound:
                continue
            cell = self.cell(z, size)
            if not any(self.contains(cell, a) for a in avoid):
                return size


class PointSet:
    """Ordered, duplicate-free growing set of group elements."""

    def __init__(self, points=()):
        self.points: list = []
        self._set: set = set()
        self.array = kernels.IntArray()
        for p in points:
            self.add(p)

    def add(self, p):
        if p in self._set:
            return
        self.points.append(p)
        self._set.add(p)
        if isinstance(p, int):
            self.array.append(p)
        else:
            self.array.ok = False

    def __contains__(self, p):
        return p in self._set

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


class CellIndex:
    """Growing collection of cells with membership/overlap queries (linear scan)."""

    def __init__(self, geometry: Geometry):
        self.geometry = geometry
        self.cells: list[Cell] = []

    def add(self, cell: Cell):
        self.cells.append(cell)

    def __iter__(self):
        return iter(self.cells)

    def __len__(self):
        return len(self.cells)

    def covers(self, g) -> bool:
        contains = self.geometry.contains
        return any(contains(c, g) for c in self.cells)

    def overlaps(self, cell: Cell) -> bool:
        disjoint = self.geometry.cells_disjoint
        return any(not disjoint(cell, c) for c in self.cells)

    def region(self) -> Region:
        return Region(tuple(self.cells))


# ---------------------------------------------------------------------------
# Z dense in the p-adic integers


def valuation(d: int, p: int) -> int:
    if d == 0:
        raise ContractError("valuation of 0 is infinite")
    v = 0
    while d % p == 0:
        d //= p
        v += 1
    return v


class PadicGeometry(Geometry):
    precompact = True
    family = "padic"

    def __init__(self, p: int, group: Group | None = None):
        super().__init__(group or IntegerGroup())
        self.p = p

    def contains(self, cell, g):
        d = g - cell.center
        return d == 0 or valuation(d, self.p) >= cell.size

    def cells_disjoint(self, c1, c2):
        d = c1.center - c2.center
        return d != 0 and valuation(d, self.p) < min(c1.size, c2.size)

    def size_measure(self, size):
        return Fraction(1, self.p ** size)

    def sum_measures(self, sizes):
        return power_sum(self.p, sizes)

    def ladder(self, start=0):
        k = start
        while True:
            yield k
            k += 1

    def first_rung_below(self, bound):
        return min_exponent_below(self.p, bound)

    def encode_size(self, size):
        return f"level:{size}"

    def decode_size(self, text):
        kind, _, value = text.partition(":")
        level = int(value) if kind == "level" else -1
        if level < 0 or str(level) != value:
            raise ValueError(f"bad p-adic size {text!r}")
        return level

    def separation(self, a, b):
        if a == b:
            raise ContractError("separation needs distinct points")
        return valuation(a - b, self.p) + 1

    def new_index(self):
        return PadicIndex(self)

    def _max_valuation(self, x, forbidden):
        if isinstance(forbidden, PadicIndex):
            v = forbidden.max_valuation(x)
        else:
            v = max((valuation(x - c.center, self.p) if x != c.center else kernels.HIT_EQUAL
                     for c in forbidden), default=-1)
        return v

    # the ladder scan is monotone, so the least admissible level has a closed form
    def fit_shared_neighborhood(self, x, y, forbidden, bound):
        if x == y:
            raise ContractError("fit_shared_neighborhood needs x != y")
        if self.region_contains(forbidden, x) or self.region_contains(forbidden, y):
            raise ContractError("points must lie outside the forbidden region")
        # ball(x, s) misses ball(c, k) with x outside it iff s > v_p(x - c)
        need = max(self._max_valuation(x, forbidden), self._max_valuation(y, forbidden),
                   valuation(x - y, self.p))
        return max(need + 1, self.first_rung_below(bound))

    def fit_point_neighborhood(self, z, avoid, bound):
        if not isinstance(avoid, PointSet):
            avoid = list(avoid)
        if z in avoid:
            raise ContractError("z must not be one of the avoided points")
        if isinstance(avoid, PointSet):
            need = kernels.zp_max_valuation(z, avoid.array, self.p)
        else:
            need = max((valuation(z - a, self.p) for a in avoid), default=-1)
        return max(need + 1, self.first_rung_below(bound))


class PadicIndex(CellIndex):
    """Balls split by level.

    For int64-sized values a ball of level k with ``p**k > 2**62`` holds g only
    if g is its center, so those "fine" balls live in a hash set; the few
    coarse balls go through the compiled scan.
    """

    def __init__(self, geometry: PadicGeometry):
        super().__init__(geometry)
        p = geometry.p
        self._fine_level = next(k for k in range(64) if p ** k > 1 << 62)
        self._centers = kernels.IntArray()       # every center, for valuations
        self._coarse_centers = kernels.IntArray()
        self._coarse_levels = kernels.IntArray()
        self._fine: set = set()
        self._wild: list[Cell] = []               # centers beyond int64 range

    def add(self, cell):
        super().add(cell)
        self._centers.append(cell.center)
        if not kernels.fits(cell.center):
            self._wild.append(cell)
        elif cell.size >= self._fine_level:
            self._fine.add(cell.center)
        else:
            self._coarse_centers.append(cell.center)
            self._coarse_levels.append(cell.size)

    def covers(self, g):
        if not kernels.fits(g):
            return super().covers(g)
        if g in self._fine:
            return True
        if kernels.zp_first_hit(g, self._coarse_centers, self._coarse_levels,
                                self.geometry.p) >= 0:
            return True
        contains = self.geometry.contains
        return any(contains(c, g) for c in self._wild)

    def max_valuation(self, x):
        return kernels.zp_max_valuation(x, self._centers, self.geometry.p)


# ---------------------------------------------------------------------------
# Z dense in the circle via n -> frac(n * phi), phi = (sqrt 5 - 1) / 2


def radius_ladder(start=0):
    k = start
    while True:
        yield Fraction(1, 2 ** (k + 1))
        k += 1


def _sign_root5(K: int, R: int) -> int:
    """Sign of K*sqrt(5) - R for integers, K != 0 or R != 0 decided exactly."""
    if K == 0:
        return (R < 0) - (R > 0)
    if K > 0:
        return 1 if R <= 0 or 5 * K * K > R * R else -1
    return -1 if R >= 0 or 5 * K * K > R * R else 1


def golden_within(k: int, eps: Fraction) -> bool:
    """Is frac(k * phi) within circle distance ``eps`` of 0 (closed)?"""
    if eps >= HALF:
        return True
    if k == 0:
        return True
    # k*phi = (k*sqrt5 - k)/2 and frac(k*phi) = (k*sqrt5 - t)/2 with t below;
    # scale by the denominator Q of eps = P/Q to stay in integers
    t = k + 2 * ((floor_sqrt5_multiple(k) - k) // 2)
    P, Q = eps.numerator, eps.denominator
    K = Q * k
    if _sign_root5(K, Q * t + 2 * P) < 0:
        return True
    return _sign_root5(K, Q * (t + 2) - 2 * P) > 0


# fixed-point positions: W fractional bits, true value within 2 units
FIXED_BITS = 64
_FULL = 1 << FIXED_BITS
_SLACK = 8


@lru_cache(maxsize=1 << 20)
def golden_fixed_position(k: int) -> int:
    """floor(frac(k*phi) * 2**64) up to an error of at most 2 units."""
    t = k + 2 * ((floor_sqrt5_multiple(k) - k) // 2)
    s = floor_sqrt5_multiple(k << FIXED_BITS)
    return ((s - (t << FIXED_BITS)) >> 1) % _FULL


def _cyclic_gap(a: int, b: int) -> int:
    d = (a - b) % _FULL
    return min(d, _FULL - d)


def _reach_units(radius: Fraction) -> int:
    # ceil(radius * 2**W) plus slack for both endpoints' approximation error
    return -(-(radius.numerator << FIXED_BITS) // radius.denominator) + _SLACK


class CircleGeometry(Geometry):
    precompact = True
    family = "circle"

    def __init__(self, group: Group | None = None):
        super().__init__(group or IntegerGroup())

    def contains(self, cell, g):
        return golden_within(g - cell.center, cell.size)

    def cells_disjoint(self, c1, c2):
        return not golden_within(c1.center - c2.center, c1.size + c2.size)

    def size_measure(self, size):
        return min(2 * size, Fraction(1))

    def sum_measures(self, sizes):
        sizes = list(sizes)
        # ladder radii 2^-(k+1) have measure 2^-k
        if all(s.numerator == 1 and s.denominator & (s.denominator - 1) == 0 for s in sizes):
            return power_sum(2, (max(s.denominator.bit_length() - 2, 0) for s in sizes))
        return super().sum_measures(sizes)

    def ladder(self, start=0):
        return radius_ladder(start)

    def first_rung_below(self, bound):
        return min_exponent_below(2, bound)

    def encode_size(self, size):
        return "radius:" + format_rational(size)

    def decode_size(self, text):
        return _decode_radius(text)

    def new_index(self):
        return CircleIndex(self)

    def fit_point_neighborhood(self, z, avoid, bound):
        if not isinstance(avoid, PointSet):
            avoid = list(avoid)
        if z in avoid:
            raise ContractError("z must not be one of the avoided points")
        here = golden_fixed_position(z)
        for size in self.ladder(self.first_rung_below(bound)):
            if self.size_gauge(size) >= bound:
                continue
            reach = _reach_units(size)
            cell = self.cell(z, size)
            # points whose fixed-point gap exceeds the reach are provably outside
            if not any(self.contains(cell, a) for a in avoid
                       if _cyclic_gap(here, golden_fixed_position(a)) <= reach):
                return size


class CircleIndex(CellIndex):
    """Arcs split into a few wide ones (scanned) and narrow ones sorted by position."""

    WIDE = Fraction(1, 1 << 16)

    def __init__(self, geometry):
        super().__init__(geometry)
        self._wide: list[Cell] = []
        self._keys: list[int] = []
        self._narrow: list[Cell] = []
        self._wide_reach = _reach_units(self.WIDE)

    def add(self, cell):
        super().add(cell)
        if cell.size >= self.WIDE:
            self._wide.append(cell)
            return
        key = golden_fixed_position(cell.center)
        pos = bisect.bisect_right(self._keys, key)
        self._keys.insert(pos, key)
        self._narrow.insert(pos, cell)

    def _window(self, key, reach):
        if 2 * reach + 1 >= _FULL:
            return self._narrow
        lo, hi = key - reach, key + reach
        spans = [(lo, hi)]
        if lo < 0:
            spans = [(0, hi), (lo + _FULL, _FULL - 1)]
        elif hi >= _FULL:
            spans = [(lo, _FULL - 1), (0, hi - _FULL)]
        out = []
        for a, b in spans:
            i = bisect.bisect_left(self._keys, a)
            j = bisect.bisect_right(self._keys, b)
            out.extend(self._narrow[i:j])
        return out

    def covers(self, g):
        contains = self.geometry.contains
        if any(contains(c, g) for c in self._wide):
            return True
        key = golden_fixed_position(g)
        return any(contains(c, g) for c in self._window(key, self._wide_reach))

    def overlaps(self, cell):
        disjoint = self.geometry.cells_disjoint
        if any(not disjoint(cell, c) for c in self._wide):
            return True
        key = golden_fixed_position(cell.center)
        reach = _reach_units(cell.size) + self._wide_reach
        return any(not disjoint(cell, c) for c in self._window(key, reach))


def _decode_radius(text):
    kind, _, value = text.partition(":")
    if kind != "radius":
        raise ValueError(f"bad radius size {text!r}")
    r = parse_rational(value)
    if r <= 0 or "/" not in value:
        raise ValueError(f"bad radius size {text!r}")
    return r


# ---------------------------------------------------------------------------
# Q with its usual topology


def _gap_exceeds(a: Fraction, b: Fraction, r1: Fraction, r2: Fraction = Fraction(0)) -> bool:
    """|a - b| > r1 + r2, by integer cross-multiplication."""
    an, ad, bn, bd = a.numerator, a.denominator, b.numerator, b.denominator
    p1, q1, p2, q2 = r1.numerator, r1.denominator, r2.numerator, r2.denominator
    return abs(an * bd - bn * ad) * q1 * q2 > (p1 * q2 + p2 * q1) * ad * bd


class LineGeometry(Geometry):
    family = "line"

    def contains(self, cell, g):
        return not _gap_exceeds(Fraction(g), cell.center, cell.size)

    def cells_disjoint(self, c1, c2):
        return _gap_exceeds(c1.center, c2.center, c1.size, c2.size)

    def size_gauge(self, size):
        # Q carries no Haar measure; fitting bounds compare against the radius
        return size

    def ladder(self, start=0):
        return radius_ladder(start)

    def first_rung_below(self, bound):
        # rung k has radius 2^-(k+1)
        return max(min_exponent_below(2, bound) - 1, 0)

    def encode_size(self, size):
        return "radius:" + format_rational(size)

    def decode_size(self, text):
        return _decode_radius(text)

    def new_index(self):
        return LineIndex(self)


class LineIndex(CellIndex):
    """Intervals bucketed by the floor of their center; queries visit nearby buckets."""

    def __init__(self, geometry):
        super().__init__(geometry)
        self._buckets: dict[int, list[Cell]] = {}
        self._max_radius = Fraction(0)

    def add(self, cell):
        super().add(cell)
        c = cell.center
        self._buckets.setdefault(c.numerator // c.denominator, []).append(cell)
        self._max_radius = max(self._max_radius, cell.size)

    def _window(self, center, reach):
        # integer bucket bounds, widened by one to absorb floor rounding
        base = center.numerator // center.denominator
        span = int(reach) + 2
        lo, hi = base - span, base + span
        if hi - lo > len(self._buckets):
            return self.cells
        out = []
        for k in range(lo, hi + 1):
            out.extend(self._buckets.get(k, ()))
        return out

    def covers(self, g):
        return any(self.geometry.contains(c, g) for c in self._window(g, self._max_radius))

    def overlaps(self, cell):
        disjoint = self.geometry.cells_disjoint
        return any(not disjoint(cell, c)
                   for c in self._window(cell.center, int(cell.size) + int(self._max_radius) + 1))


# ---------------------------------------------------------------------------
# discrete groups


class DiscreteGeometry(Geometry):
    family = "discrete"

    def contains(self, cell, g):
        return g == cell.center

    def cells_disjoint(self, c1, c2):
        return c1.center != c2.center

    def size_gauge(self, size):
        return Fraction(0)

    def ladder(self, start=0):
        while True:
            yield POINT

    def encode_size(self, size):
        return POINT

    def decode_size(self, text):
        if text != POINT:
            raise ValueError(f"bad discrete size {text!r}")
        return POINT

    def separation(self, a, b):
        if a == b:
            raise ContractError("separation needs distinct points")
        return POINT

    def new_index(self):
        return DiscreteIndex(self)


class DiscreteIndex(CellIndex):
    def __init__(self, geometry):
        super().__init__(geometry)
        self._points = set()

    def add(self, cell):
        super().add(cell)
        self._points.add(cell.center)

    def covers(self, g):
        return g in self._points

    def overlaps(self, cell):
        return cell.center in self._points


# ---------------------------------------------------------------------------


def find_difference_pair(geometry: Geometry, g, forbidden, excluded=frozenset()):
    """Least-index y with y and x = g*y both outside ``forbidden`` and ``excluded``.

    Returns ``(x, y)``.  Termination rests on the forbidden region having
    measure below 1/2 and the group being dense in its completion.
    """
    group = geometry.group
    if g == group.identity:
        raise ContractError("the identity is never a target")
    if geometry.precompact and geometry.region_measure_bound(forbidden) >= HALF:
        raise ContractError("forbidden region must have measure bound below 1/2")
    for _, y in group.iter_from(0):
        if y in excluded or geometry.region_contains(forbidden, y):
            continue
        x = group.compose(g, y)
        if x in excluded or geometry.region_contains(forbidden, x):
            continue
        return x, y
