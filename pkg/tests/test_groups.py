import itertools
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from discgen.groups import (ContractError, FreeGroup, IntegerGroup, RationalGroup,
                            calkin_wilf_index, reduce_word)

GROUPS = [IntegerGroup(), RationalGroup(), FreeGroup()]


def calkin_wilf_sequence(n):
    """Direct generation: q -> 1 / (2 floor(q) - q + 1)."""
    q, out = Fraction(1), []
    for _ in range(n):
        out.append(q)
        q = 1 / (2 * (q.numerator // q.denominator) - q + 1)
    return out


def test_integer_enumeration():
    z = IntegerGroup()
    assert [z.element_at(i) for i in range(5)] == [0, 1, -1, 2, -2]
    assert z.index_of(-2) == 4
    assert z.difference(5, 3) == 2


def test_free_group_enumeration():
    f = FreeGroup()
    assert [f.element_at(i) for i in range(6)] == ["", "a", "A", "b", "B", "aa"]
    assert f.index_of("A") == 2
    assert f.difference("ab", "b") == "a"
    # reduced words of length n: 4 * 3^(n-1)
    for n in range(1, 5):
        words = [w for w in ("".join(t) for t in itertools.product("aAbB", repeat=n))
                 if reduce_word(w) == w]
        assert len(words) == 4 * 3 ** (n - 1)
        assert [f.index_of(w) for w in words] == sorted(f.index_of(w) for w in words)


def test_rational_enumeration_examples():
    q = RationalGroup()
    got = [q.element_at(i) for i in range(7)]
    assert got == [0, 1, -1, Fraction(1, 2), Fraction(-1, 2), 2, -2]
    assert q.index_of(Fraction(1, 2)) == 3
    assert q.difference(Fraction(1, 2), Fraction(1, 3)) == Fraction(1, 6)


def test_rational_order_follows_calkin_wilf_within_height():
    q = RationalGroup()
    seq = calkin_wilf_sequence(5000)
    assert [calkin_wilf_index(x) for x in seq[:200]] == list(range(1, 201))
    positives = [q.element_at(i) for i in range(1, 3000) if q.element_at(i) > 0]
    for h in range(1, 12):
        at_h = [x for x in positives if max(x.numerator, x.denominator) == h]
        want = [x for x in seq if max(x.numerator, x.denominator) == h]
        assert at_h == want[:len(at_h)]
    # every positive is immediately followed by its negative
    for i in range(1, 2000, 2):
        assert q.element_at(i + 1) == -q.element_at(i)


@pytest.mark.parametrize("group", GROUPS, ids=lambda g: g.name)
def test_enumeration_is_a_bijection_on_a_prefix(group):
    seen = set()
    for i in range(10_000):
        x = group.element_at(i)
        assert group.index_of(x) == i
        assert x not in seen
        seen.add(x)
    assert group.element_at(0) == group.identity


@pytest.mark.parametrize("group", GROUPS, ids=lambda g: g.name)
@given(data=st.data())
def test_group_axioms(group, data):
    idx = st.integers(0, 999)
    a, b, c = (group.element_at(data.draw(idx)) for _ in range(3))
    e = group.identity
    assert group.compose(group.compose(a, b), c) == group.compose(a, group.compose(b, c))
    assert group.compose(a, e) == a == group.compose(e, a)
    assert group.compose(a, group.inverse(a)) == e
    assert (group.difference(a, b) == e) == (a == b)


@pytest.mark.parametrize("group", GROUPS, ids=lambda g: g.name)
@given(i=st.integers(0, 5000))
def test_encode_round_trip(group, i):
    x = group.element_at(i)
    text = group.encode(x)
    assert text.isascii()
    assert group.decode(text) == x


def test_decode_rejects_non_canonical():
    with pytest.raises((ValueError, ContractError)):
        FreeGroup().decode("aA")
    with pytest.raises((ValueError, ContractError)):
        RationalGroup().decode("2/4")
    with pytest.raises((ValueError, ContractError)):
        IntegerGroup().decode("+3")
