"""Exact number layer: rational (de)serialization and the field Q(sqrt 5)."""

from __future__ import annotations

import math
import sys
from fractions import Fraction
from functools import total_ordering

# Ledger measures for long runs have denominators far beyond the default
# 4300-digit str() guard.
if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(0)


def format_rational(q) -> str:
    """Serialize a rational as ``"num/den"`` in lowest terms."""
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: str) -> Fraction:
    """Inverse of :func:`format_rational`; plain integers are accepted too.

    Rejects anything not already in canonical lowest-terms form so that a
    tampered trace cannot smuggle in an equivalent spelling.
    """
    if not isinstance(text, str):
        raise ValueError(f"expected a rational string, got {text!r}")
    if "/" in text:
        num_s, den_s = text.split("/", 1)
        num, den = int(num_s), int(den_s)
        if den <= 0 or math.gcd(num, den) != 1:
            raise ValueError(f"rational not in lowest terms: {text!r}")
        return Fraction(num, den)
    return Fraction(int(text))


def floor_sqrt5_multiple(k: int) -> int:
    """floor(k * sqrt(5)) for an integer k."""
    if k == 0:
        return 0
    r = math.isqrt(5 * k * k)
    # sqrt(5) is irrational, so k*sqrt(5) is never an integer
    return r if k > 0 else -r - 1


def sign_sqrt5_minus(k: int, r: Fraction) -> int:
    """Sign of ``k*sqrt(5) - r`` for integer k and rational r, decided exactly."""
    if k == 0:
        return (r < 0) - (r > 0)
    if k > 0:
        if r <= 0:
            return 1
        # compare 5 k^2 with r^2 (never equal: sqrt 5 irrational)
        return 1 if 5 * k * k * r.denominator ** 2 > r.numerator ** 2 else -1
    if r >= 0:
        return -1
    return -1 if 5 * k * k * r.denominator ** 2 > r.numerator ** 2 else 1


@total_ordering
class QuadraticNumber:
    """An element ``a + b*sqrt(5)`` of Q(sqrt 5) with exact rational parts."""

    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        self.a = Fraction(a)
        self.b = Fraction(b)

    @classmethod
    def coerce(cls, value) -> QuadraticNumber:
        if isinstance(value, QuadraticNumber):
            return value
        return cls(value, 0)

    def __repr__(self):
        return f"QuadraticNumber({self.a}, {self.b})"

    def __str__(self):
        return f"{self.a}{'+' if self.b >= 0 else '-'}{abs(self.b)}*sqrt5"

    def __hash__(self):
        return hash((self.a, self.b))

    def __eq__(self, other):
        try:
            other = QuadraticNumber.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.a == other.a and self.b == other.b

    def __lt__(self, other):
        return (self - QuadraticNumber.coerce(other)).sign() < 0

    def __neg__(self):
        return QuadraticNumber(-self.a, -self.b)

    def __add__(self, other):
        other = QuadraticNumber.coerce(other)
        return QuadraticNumber(self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __sub__(self, other):
        other = QuadraticNumber.coerce(other)
        return QuadraticNumber(self.a - other.a, self.b - other.b)

    def __rsub__(self, other):
        return QuadraticNumber.coerce(other) - self

    def __mul__(self, other):
        other = QuadraticNumber.coerce(other)
        return QuadraticNumber(self.a * other.a + 5 * self.b * other.b,
                               self.a * other.b + self.b * other.a)

    __rmul__ = __mul__

    def sign(self) -> int:
        """Exact sign in {-1, 0, 1}."""
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sb == 0:
            return sa
        if sa == 0 or sa == sb:
            return sb
        # opposite signs: compare a^2 with 5 b^2
        diff = self.a * self.a - 5 * self.b * self.b
        return sa if diff > 0 else sb

    def floor(self) -> int:
        if self.b == 0:
            return math.floor(self.a)
        den = math.lcm(self.a.denominator, self.b.denominator)
        num_a = self.a.numerator * (den // self.a.denominator)
        num_b = self.b.numerator * (den // self.b.denominator)
        return (num_a + floor_sqrt5_multiple(num_b)) // den

    def frac(self) -> QuadraticNumber:
        return self - self.floor()

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(5)


SQRT5 = QuadraticNumber(0, 1)
# golden rotation angle (sqrt 5 - 1) / 2
PHI = QuadraticNumber(Fraction(-1, 2), Fraction(1, 2))
