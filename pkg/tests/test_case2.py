from fractions import Fraction

import pytest

from discgen import make_instance
from discgen.case2 import Block, init_case2, run_case2, step_case2
from discgen.groups import ContractError
from discgen.verifier import check_cover, check_disjointness

from conftest import cached_run

F = Fraction


def test_init_examples(qline):
    s = init_case2(qline)
    assert s.blocks == () and (s.witness.U, s.witness.V) == (1, F(1, 2))
    with pytest.raises(ContractError):
        init_case2(make_instance("z-in-zp", 2))


def test_first_blocks():
    z = make_instance("z-discrete")
    s = step_case2(init_case2(z))
    assert s.blocks == (Block(0, 0, 0),)
    s = step_case2(s)
    assert s.blocks[1] == Block(1, 1, 2)
    q = make_instance("q-usual")
    s = step_case2(step_case2(init_case2(q)))
    assert s.blocks[1] == Block(F(1), F(2), F(3))


def brute_block(group, blocks, g, V):
    """Least-index t with {t, g t} V missing every earlier block, by scanning."""
    i = 0
    while True:
        t = group.element_at(i)
        mine = {t, group.compose(g, t)}
        if all(abs(a - b) > 2 * V for a in mine for blk in blocks for b in (blk.x, blk.gx)):
            return t
        i += 1


def test_q_blocks_match_brute_scan(qline):
    state, _ = cached_run("q-usual", None, 40)
    for n, blk in enumerate(state.blocks):
        assert blk.x == brute_block(qline.group, state.blocks[:n], blk.g, qline.witness.V)


@pytest.mark.parametrize("name", ["q-usual", "z-discrete", "f2-discrete"])
def test_run_properties(name):
    state, traces = cached_run(name, None, 100)
    group = state.instance.group
    for n, (blk, t) in enumerate(zip(state.blocks, traces)):
        assert blk.g == group.element_at(n) == t.g
        assert group.difference(blk.gx, blk.x) == blk.g
    assert check_disjointness(state).passed
    assert check_cover(state, 99).passed


@pytest.mark.parametrize("name", ["q-usual", "f2-discrete"])
def test_points_are_pairwise_separated(name):
    state, _ = cached_run(name, None, 40)
    geo = state.instance.geometry
    pts = state.points()
    for i, a in enumerate(pts):
        for b in pts[i + 1:]:
            s = geo.separation(a, b)
            assert geo.cells_disjoint(geo.cell(a, s), geo.cell(b, s))


def test_discrete_first_hundred_covered():
    state, _ = cached_run("z-discrete", None, 100)
    diffs = {a - b for a in state.points() for b in state.points()}
    assert all(state.instance.group.element_at(i) in diffs for i in range(100))


def test_zero_steps_and_determinism(qline):
    assert run_case2(qline, 0)[0].blocks == ()
    assert run_case2(qline, 30) == run_case2(qline, 30)


def test_thin_mode_keeps_blocks_disjoint():
    state, _ = cached_run("f2-discrete", None, 80, True)
    assert check_disjointness(state).passed
    assert check_cover(state, 79).passed
