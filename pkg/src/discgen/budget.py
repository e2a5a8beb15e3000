"""Budget sequences r_0, r_1, ... whose total must stay below 1/6."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .exact import format_rational

SIXTH = Fraction(1, 6)


class BudgetError(ValueError):
    pass


@dataclass(frozen=True)
class GeometricBudget:
    """r_i = first * ratio**i; total first / (1 - ratio) when ratio < 1."""

    first: Fraction
    ratio: Fraction = Fraction(1, 2)

    def __post_init__(self):
        if self.first <= 0 or self.ratio <= 0:
            raise BudgetError("budget terms must be positive")

    def r(self, i: int) -> Fraction:
        if self.ratio == Fraction(1, 2):
            return Fraction(self.first.numerator, self.first.denominator << i)
        return self.first * self.ratio ** i

    @property
    def total(self) -> Fraction | None:
        """Exact sum of the series, or None when it diverges."""
        if self.ratio >= 1:
            return None
        return self.first / (1 - self.ratio)

    def certify(self) -> Fraction:
        total = self.total
        if total is None:
            raise BudgetError(f"budget {self.identifier} diverges")
        if total >= SIXTH:
            raise BudgetError(f"budget {self.identifier} sums to {total}, not below 1/6")
        return total

    @property
    def identifier(self) -> str:
        if self.ratio == 1:
            return "const-" + format_rational(self.first)
        if self.ratio == Fraction(1, 2):
            return "geom-" + format_rational(self.first)
        return f"geom-{format_rational(self.first)}-{format_rational(self.ratio)}"


DEFAULT_BUDGET = GeometricBudget(Fraction(1, 16))

_RAT = r"(\d+/\d+|\d+)"


def parse_budget(text: str) -> GeometricBudget:
    """``geom-1/16`` (ratio 1/2), ``geom-1/16-1/3`` or ``const-1/6``."""
    m = re.fullmatch(rf"geom-{_RAT}(?:-{_RAT})?", text)
    if m:
        ratio = Fraction(m.group(2)) if m.group(2) else Fraction(1, 2)
        return GeometricBudget(Fraction(m.group(1)), ratio)
    m = re.fullmatch(rf"const-{_RAT}", text)
    if m:
        return GeometricBudget(Fraction(m.group(1)), Fraction(1))
    raise BudgetError(f"unknown budget rule {text!r}")
