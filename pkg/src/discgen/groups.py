"""Computable countable groups with a fixed enumeration starting at the identity.

Every group here exposes the same small surface: ``element_at``/``index_of``
for the enumeration, ``compose``/``inverse``/``difference`` for the group law
and ``encode``/``decode`` for trace serialization.  Elements are plain
immutable Python values (``int``, ``Fraction``, ``str``) so equality is
structural.
"""

from __future__ import annotations

import bisect
import math
from fractions import Fraction

from .exact import format_rational, parse_rational


class ContractError(ValueError):
    """A caller broke an operation's precondition."""


class Group:
    name = "abstract"
    enumeration = "abstract"
    identity = None

    def element_at(self, i: int):
        raise NotImplementedError

    def index_of(self, x) -> int:
        raise NotImplementedError

    def compose(self, a, b):
        raise NotImplementedError

    def inverse(self, a):
        raise NotImplementedError

    def difference(self, a, b):
        """``a * b^-1``."""
        return self.compose(a, self.inverse(b))

    def encode(self, x) -> str:
        raise NotImplementedError

    def decode(self, text: str):
        raise NotImplementedError

    def is_element(self, x) -> bool:
        raise NotImplementedError

    def iter_from(self, start: int = 0):
        i = start
        while True:
            yield i, self.element_at(i)
            i += 1

    def __repr__(self):
        return f"{type(self).__name__}()"


class IntegerGroup(Group):
    """The additive integers, enumerated 0, 1, -1, 2, -2, ..."""

    name = "Z"
    enumeration = "zigzag"
    identity = 0

    def element_at(self, i: int) -> int:
        if i < 0:
            raise ContractError(f"negative index {i}")
        return (i + 1) // 2 if i % 2 else -(i // 2)

    def index_of(self, x: int) -> int:
        if x > 0:
            return 2 * x - 1
        return -2 * x

    def compose(self, a: int, b: int) -> int:
        return a + b

    def inverse(self, a: int) -> int:
        return -a

    def difference(self, a: int, b: int) -> int:
        return a - b

    def encode(self, x: int) -> str:
        return str(x)

    def decode(self, text: str) -> int:
        value = int(text)
        if str(value) != text:
            raise ValueError(f"non-canonical integer {text!r}")
        return value

    def is_element(self, x) -> bool:
        return isinstance(x, int) and not isinstance(x, bool)


def calkin_wilf_index(q: Fraction) -> int:
    """Breadth-first position (root = 1) of a positive rational in the Calkin-Wilf tree."""
    a, b = q.numerator, q.denominator
    if a <= 0:
        raise ContractError(f"not a positive rational: {q}")
    bits = []
    # a/b with a < b is the left child of a/(b-a); otherwise the right child
    # of (a-b)/b.  Runs of equal moves are collapsed with divmod.
    while (a, b) != (1, 1):
        if a < b:
            steps, rem = divmod(b, a)
            if rem == 0:
                steps -= 1
            bits.append(("0", steps))
            b -= steps * a
        else:
            steps, rem = divmod(a, b)
            if rem == 0:
                steps -= 1
            bits.append(("1", steps))
            a -= steps * b
    path = "".join(bit * n for bit, n in reversed(bits))
    return int("1" + path, 2)


class RationalGroup(Group):
    """The additive rationals.

    Enumeration: 0, then rationals graded by height ``max(|num|, den)``; inside
    one height the positive values follow Calkin-Wilf order and each is
    immediately followed by its negative.  Grading by height keeps every
    magnitude reachable at a polynomial index.
    """

    name = "Q"
    enumeration = "height-calkin-wilf"
    identity = Fraction(0)

    def __init__(self):
        self._levels: list[list[Fraction]] = [[]]  # positives per height
        self._offsets: list[int] = [1]             # index of first element of height h+1
        self._positions: list[dict] = [{}]

    def _extend(self):
        h = len(self._levels)
        if h == 1:
            level = [Fraction(1)]
        else:
            level = [Fraction(p, h) for p in range(1, h) if math.gcd(p, h) == 1]
            level += [Fraction(h, q) for q in range(1, h) if math.gcd(q, h) == 1]
            level.sort(key=calkin_wilf_index)
        self._levels.append(level)
        self._positions.append({q: i for i, q in enumerate(level)})
        self._offsets.append(self._offsets[-1] + 2 * len(level))

    def element_at(self, i: int) -> Fraction:
        if i < 0:
            raise ContractError(f"negative index {i}")
        if i == 0:
            return Fraction(0)
        while self._offsets[-1] <= i:
            self._extend()
        h = bisect.bisect_right(self._offsets, i)
        r = i - self._offsets[h - 1]
        q = self._levels[h][r // 2]
        return -q if r % 2 else q

    def index_of(self, x: Fraction) -> int:
        x = Fraction(x)
        if x == 0:
            return 0
        h = max(abs(x.numerator), x.denominator)
        while len(self._levels) <= h:
            self._extend()
        pos = self._positions[h][abs(x)]
        return self._offsets[h - 1] + 2 * pos + (1 if x < 0 else 0)

    def compose(self, a, b):
        return a + b

    def inverse(self, a):
        return -a

    def difference(self, a, b):
        return a - b

    def encode(self, x) -> str:
        return format_rational(x)

    def decode(self, text: str) -> Fraction:
        if "/" not in text:
            raise ValueError(f"rational must be written num/den: {text!r}")
        return parse_rational(text)

    def is_element(self, x) -> bool:
        return isinstance(x, Fraction)


_LETTERS = "aAbB"
_INVERSE = {"a": "A", "A": "a", "b": "B", "B": "b"}


def reduce_word(word: str) -> str:
    out: list[str] = []
    for ch in word:
        if out and out[-1] == _INVERSE[ch]:
            out.pop()
        else:
            out.append(ch)
    return "".join(out)


class FreeGroup(Group):
    """Free group on a, b as reduced words; capitals are inverses.

    Enumerated length-lexicographically with letter order a < A < b < B.
    """

    name = "F2"
    enumeration = "length-lex"
    identity = ""

    @staticmethod
    def _count(length: int) -> int:
        return 1 if length == 0 else 4 * 3 ** (length - 1)

    def element_at(self, i: int) -> str:
        if i < 0:
            raise ContractError(f"negative index {i}")
        length = 0
        while i >= self._count(length):
            i -= self._count(length)
            length += 1
        if length == 0:
            return ""
        block = 3 ** (length - 1)
        first, i = divmod(i, block)
        word = [_LETTERS[first]]
        for pos in range(length - 2, -1, -1):
            digit, i = divmod(i, 3 ** pos)
            allowed = [c for c in _LETTERS if c != _INVERSE[word[-1]]]
            word.append(allowed[digit])
        return "".join(word)

    def index_of(self, x: str) -> int:
        length = len(x)
        base = sum(self._count(k) for k in range(length))
        if length == 0:
            return 0
        rank = _LETTERS.index(x[0])
        for prev, ch in zip(x, x[1:]):
            allowed = [c for c in _LETTERS if c != _INVERSE[prev]]
            rank = rank * 3 + allowed.index(ch)
        return base + rank

    def compose(self, a: str, b: str) -> str:
        return reduce_word(a + b)

    def inverse(self, a: str) -> str:
        return "".join(_INVERSE[c] for c in reversed(a))

    def encode(self, x: str) -> str:
        return x

    def decode(self, text: str) -> str:
        if not self.is_element(text):
            raise ValueError(f"not a reduced word: {text!r}")
        return text

    def is_element(self, x) -> bool:
        return (isinstance(x, str) and all(c in _INVERSE for c in x)
                and reduce_word(x) == x)
