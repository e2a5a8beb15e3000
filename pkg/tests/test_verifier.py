import json
import random
from dataclasses import replace
from fractions import Fraction

import pytest

from discgen.exact import PHI

from discgen import make_instance, run_case1, run_case2
from discgen.case1 import Pair, ZEntry
from discgen.groups import ContractError
from discgen.trace import RunConfig, generate_lines
from discgen.verifier import (FAIL, MUTATIONS, TraceView, as_view, brute_difference_set,
                              check_budget, check_cover, check_disjointness, check_thin,
                              check_z_separation, golden_distance, golden_units, mutate,
                              run_mutation_suite, verify_text, verify_trace)

from conftest import cached_run

F = Fraction


def text_of(config):
    return "".join(line + "\n" for line in generate_lines(config))


def test_brute_difference_set_examples():
    z, f2 = make_instance("z-discrete").group, make_instance("f2-discrete").group
    assert brute_difference_set([0], z) == {0}
    assert brute_difference_set([0, 1, 2], z) == {0, 1, -1, 2, -2}
    # by hand: x * y^-1 over {e, a, ab}
    assert brute_difference_set(["", "a", "ab"], f2) == {"", "A", "BA", "a", "aBA", "ab", "abA"}


def test_check_cover_examples(zp2):
    state, _ = run_case1(zp2, 1)
    assert check_cover(state, 4).passed
    assert check_cover(state, 0).passed
    assert not check_cover(state, 5).passed


def test_mutated_pair_is_caught_stagewise(zp2):
    # x_1 = 2 -> 3: A = {0, 1, 3} still covers g_0..g_4, but 3 - 1 != 1
    text = text_of(RunConfig("z-in-zp", 1, p=2))
    lines = text.splitlines()
    rec = json.loads(lines[1])
    rec["x"] = "3"
    lines[1] = json.dumps(rec, separators=(",", ":"))
    certs = {c.check: c for c in verify_trace(lines, replay=False)}
    assert certs["cover"].verdict == FAIL and certs["cover"].stage == 1
    assert certs["cover"].witness == {"x": "3", "y": "1", "target": "1"}
    view = as_view(run_case1(zp2, 1)[0])
    view.pairs[1] = (3, 1, view.pairs[1][2])
    assert check_cover(view, 4).passed


def test_disjointness_failure_names_pair(zp2):
    state, _ = run_case1(zp2, 6)
    pairs = list(state.pairs)
    pairs[4] = Pair(pairs[2].x, pairs[4].y, pairs[4].size)
    bad = check_disjointness(replace(state, pairs=tuple(pairs)))
    assert bad.verdict == FAIL and bad.stage == 4
    assert bad.witness["cells"] == ["x2", "x4"]


def test_disjointness_on_fifty_steps():
    state, _ = cached_run("z-in-zp", 2, 50)
    cert = check_disjointness(state)
    assert cert.passed and cert.values["cells"] == 101


def test_z_separation_failures(zp2):
    state, _ = cached_run("z-in-zp", 2, 40)
    zl = list(state.zlist)
    # (5): one level coarser than chosen, but still avoiding A
    oracle_pts = state.points()
    for j, e in enumerate(zl):
        q = 2 ** (e.size - 1)
        if all((e.z - a) % q for a in oracle_pts):
            zl2 = zl[:j] + [ZEntry(e.z, e.size - 1)] + zl[j + 1:]
            cert = check_z_separation(replace(state, zlist=tuple(zl2)))
            assert cert.verdict == FAIL and "measure" in cert.witness
            break
    else:
        pytest.fail("no z-entry with slack")
    # (4): a z-cell blown up to contain a point of A
    zl2 = zl[:3] + [ZEntry(zl[3].z, 0)] + zl[4:]
    cert = check_z_separation(replace(state, zlist=tuple(zl2)))
    assert cert.verdict == FAIL and "avoid" in cert.witness
    assert cert.witness["avoid"]["j"] == 3


def test_budget_examples():
    state, _ = cached_run("z-in-zp", 3, 100)
    cert = check_budget(state)
    assert cert.passed
    total = F(cert.values["total"])
    assert 0 < total <= F(3, 8)
    assert cert.values["bound"] == "3/8"
    empty = TraceView(state.instance, budget=state.budget)
    assert check_budget(empty).values["total"] == "0/1"
    with pytest.raises(ContractError):
        check_budget(run_case2(make_instance("z-discrete"), 3)[0])


def test_check_thin():
    z = make_instance("z-discrete")
    a, _ = cached_run("z-discrete", None, 150, True)
    b, _ = cached_run("z-discrete", None, 300, True)
    cert = check_thin(a, b, 1)
    assert cert.passed and cert.values["count1"] == cert.values["count2"]
    a, _ = cached_run("z-discrete", None, 150)
    b, _ = cached_run("z-discrete", None, 300)
    cert = check_thin(a, b, 1)
    assert cert.values["count2"] > cert.values["count1"] and not cert.passed
    with pytest.raises(ContractError):
        check_thin(a, b, z.group.identity)
    with pytest.raises(ContractError):
        check_thin(b, a, 1)


def test_check_cover_agrees_with_brute_on_random_prefixes():
    rng = random.Random(1)
    state, _ = cached_run("z-in-zp", 2, 50)
    group = state.instance.group
    for _ in range(100):
        k = rng.randrange(51)
        prefix = state.prefix(k)
        diffs = brute_difference_set(prefix.points(), group)
        first_gap = next(i for i in range(10**6) if group.element_at(i) not in diffs)
        assert check_cover(prefix, first_gap - 1).passed
        assert not check_cover(prefix, first_gap).passed


def test_golden_units_bracket_exact_fraction():
    # u / 2^64 <= frac(k phi) < (u + 1) / 2^64, checked in Q(sqrt 5)
    for k in range(-300, 300):
        u = golden_units(k)
        f = (PHI * k).frac()
        assert F(u, 2 ** 64) <= f < F(u + 1, 2 ** 64)
        d = golden_distance(k)
        assert d == min(f, 1 - f) and 0 <= d <= F(1, 2)


@pytest.mark.parametrize("name,p,steps", [("z-in-zp", 2, 30), ("golden-rotation", None, 20),
                                          ("q-usual", None, 40), ("f2-discrete", None, 40),
                                          ("z-discrete", None, 40)])
def test_engine_output_verifies(name, p, steps):
    certs = verify_text(text_of(RunConfig(name, steps, p=p)))
    assert all(c.passed for c in certs), [c.to_dict() for c in certs if not c.passed]
    assert certs[0].digest


@pytest.mark.parametrize("name,p", [("z-in-zp", 5), ("golden-rotation", None),
                                    ("q-usual", None)])
@pytest.mark.parametrize("replay", [True, False])
def test_mutations_rejected(name, p, replay):
    inst = make_instance(name, p)
    text = text_of(RunConfig(name, 24, p=p))
    applied = 0
    for m in MUTATIONS:
        mutated = mutate(m, text, inst)
        if mutated is None:
            continue
        applied += 1
        bad = [c for c in verify_text(mutated, replay=replay) if not c.passed]
        assert bad, m
        assert all(c.witness for c in bad)
        assert bad[0].stage is not None
    assert applied >= (9 if inst.precompact else 5)


def test_flipped_measure_digit_hits_replay_at_that_stage():
    text = text_of(RunConfig("z-in-zp", 10, p=3))
    lines = text.splitlines()
    rec = json.loads(lines[7])
    num, den = rec["measures"]["cumulative"].split("/")
    rec["measures"]["cumulative"] = f"{int(num) ^ 2}/{den}"
    lines[7] = json.dumps(rec, separators=(",", ":"))
    bad = [c for c in verify_trace(lines) if not c.passed]
    assert [(c.check, c.stage) for c in bad] == [("replay", 7), ("budget", 7)]


@pytest.mark.parametrize("text", ["", "{not json\n", "[1,2]\n", '{"format":2}\n'])
def test_malformed_input_is_structured(text):
    certs = verify_text(text)
    assert len(certs) == 1 and not certs[0].passed and certs[0].check == "format"


def test_truncated_file_is_structured():
    text = text_of(RunConfig("z-in-zp", 5, p=2))
    certs = verify_text(text[:-40])
    assert certs[-1].check == "structure" and not certs[-1].passed
    missing = "".join(line + "\n" for line in text.splitlines()[:-2])
    certs = verify_text(missing)
    assert certs[-1].check == "structure" and certs[-1].stage == 4


def test_mutation_suite_summary():
    inst = make_instance("golden-rotation")
    results = run_mutation_suite(text_of(RunConfig("golden-rotation", 12)), inst)
    assert len(results) == len(MUTATIONS)
    assert all(r.rejected for r in results if r.applied)
