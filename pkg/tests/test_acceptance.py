"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are printed even
under output capture).
"""

import random
import time
from fractions import Fraction

import mpmath
import pytest

from discgen import make_instance
from discgen.case1 import iter_case1
from discgen.cli import main as cli_main
from discgen.exact import QuadraticNumber
from discgen.trace import RunConfig, generate_lines
from discgen.verifier import (MUTATIONS, PadicOracle, brute_difference_set, check_budget,
                              check_thin, mutate, verify_text)

from conftest import cached_run

CASE1 = [("z-in-zp", 2, 200), ("z-in-zp", 3, 200), ("golden-rotation", None, 100)]
CASE2 = ["q-usual", "z-discrete", "f2-discrete"]


@pytest.fixture
def report(capsys):
    lines = []

    def add(criterion, ok, detail):
        lines.append(f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")
        return ok

    yield add
    with capsys.disabled():
        for line in lines:
            print("\n" + line, end="")
        print()


def trace_text(config):
    return "".join(line + "\n" for line in generate_lines(config))


def label(name, p):
    return name if p is None else f"{name} p={p}"


def test_criterion_1_case1_invariants(report):
    rows, ok = [], True
    for name, p, n in CASE1:
        t0 = time.perf_counter()
        certs = verify_text(trace_text(RunConfig(name, n, p=p)))
        elapsed = time.perf_counter() - t0
        checks = {c.check for c in certs}
        good = (all(c.passed for c in certs) and elapsed < 60
                and {"cover", "disjoint", "z-sep", "budget", "replay"} <= checks)
        ok &= good
        rows.append(f"{label(name, p)} N={n} {'ok' if good else 'BAD'} {elapsed:.1f}s")
    assert report(1, ok, "; ".join(rows))


def test_criterion_2_measure_budget(report):
    rows, ok = [], True
    for name, p, n in CASE1:
        state, traces = cached_run(name, p, n)
        cert = check_budget(state)
        total = Fraction(cert.values["total"])
        good = cert.passed and total < Fraction(1, 2) and total <= Fraction(3, 8)
        good &= total == traces[-1].cumulative
        ok &= good
        rows.append(f"{label(name, p)} total~{float(total):.6f} <= 3/8: {good}")
    assert report(2, ok, "; ".join(rows))


def test_criterion_3_coverage_bookkeeping(report):
    stages = {1, 5, 10, 50, 100, 200}
    rows, ok = [], True
    for name, p, n in CASE1:
        inst = make_instance(name, p)
        group = inst.group
        pts = [group.identity]
        checked = []
        for eng, t in iter_case1(inst, n):
            pts += [t.x, t.y]
            if t.step in stages:
                brute = brute_difference_set(pts, group)
                good = set(eng.diffs) == brute
                good &= all(group.element_at(i) in brute for i in range(t.step + 1))
                ok &= good
                checked.append(f"{t.step}{'' if good else '!'}")
        rows.append(f"{label(name, p)} stages {','.join(checked)}")
    assert report(3, ok, "; ".join(rows))


def test_criterion_4_case2_suite(report):
    rows, ok = [], True
    for name in CASE2:
        t0 = time.perf_counter()
        text = trace_text(RunConfig(name, 300))
        certs = verify_text(text, checks=["cover", "disjoint"])
        elapsed = time.perf_counter() - t0
        by = {c.check: c for c in certs}
        good = all(c.passed for c in certs) and elapsed < 30
        good &= "cover" in by and "disjoint" in by
        state, _ = cached_run(name, None, 300)
        group = state.instance.group
        brute = brute_difference_set(state.points(), group)
        good &= all(group.element_at(i) in brute for i in range(300))
        ok &= good
        rows.append(f"{name} N=300 {'ok' if good else 'BAD'} {elapsed:.1f}s")
    assert report(4, ok, "; ".join(rows))


def brute_count(points, g):
    # independent of the verifier: pairs (a, b) in A^2 with b - a = g
    s = set(points)
    return sum(1 for a in s if a + g in s)


def test_criterion_5_thin_mode(report):
    rows, ok = [], True
    for name, p in [("z-discrete", None), ("z-in-zp", 2)]:
        s1, _ = cached_run(name, p, 150, True)
        s2, _ = cached_run(name, p, 300, True)
        group = s1.instance.group
        gs = [group.element_at(i) for i in range(1, 31)]
        counts = [(brute_count(s1.points(), g), brute_count(s2.points(), g)) for g in gs]
        good = all(a == b for a, b in counts)
        good &= all(check_thin(s1, s2, g).passed for g in gs)
        ok &= good
        rows.append(f"{label(name, p)} thin stable for 30 g: {good}")
    s1, _ = cached_run("z-discrete", None, 150)
    s2, _ = cached_run("z-discrete", None, 300)
    grew = [g for g in range(-15, 16) if g and brute_count(s2.points(), g)
            > brute_count(s1.points(), g)]
    ok &= bool(grew)
    rows.append(f"z-discrete non-thin grows for {len(grew)} g")
    assert report(5, ok, "; ".join(rows))


def test_criterion_6_determinism_and_mutations(report, tmp_path, capsys):
    rows, ok = [], True
    for name, p, n in [("z-in-zp", 2, 40), ("golden-rotation", None, 30),
                       ("q-usual", None, 60)]:
        cfg = RunConfig(name, n, p=p)
        a, b = trace_text(cfg), trace_text(cfg)
        path = tmp_path / f"{name}.jsonl"
        path.write_text(a, encoding="ascii")
        accepted = cli_main(["verify", str(path)]) == 0
        capsys.readouterr()
        good = a == b and accepted
        inst = make_instance(name, p)
        applied = rejected = 0
        for m in MUTATIONS:
            mutated = mutate(m, a, inst)
            if mutated is None:
                continue
            applied += 1
            bad = [c for c in verify_text(mutated) if not c.passed]
            if bad and all(c.stage is not None for c in bad):
                rejected += 1
        good &= rejected == applied >= (len(MUTATIONS) if inst.precompact else 5)
        ok &= good
        rows.append(f"{label(name, p)} identical={a == b} verify={accepted} "
                    f"mutations {rejected}/{applied}")
    assert len(MUTATIONS) >= 8
    assert report(6, ok, "; ".join(rows))


def residue_tables(p, k):
    """For levels (k1, k2) <= k: residues d mod p^k with B(d, k1) and B(0, k2) meeting.

    Exhaustive: walk every residue r of B(0, k2) mod p^k and record which
    classes mod p^k1 it reaches.
    """
    q = p ** k
    reach = {}
    for k1 in range(k + 1):
        for k2 in range(k + 1):
            if max(k1, k2) != k:
                continue
            m = p ** k1
            reach[k1, k2] = {r % m for r in range(0, q, p ** k2)}, m
    return reach


def test_criterion_7_geometry_oracles(report):
    rows, ok = [], True
    rng = random.Random(2024)
    for p in (2, 3, 5):
        geo = make_instance("z-in-zp", p).geometry
        oracle = PadicOracle(make_instance("z-in-zp", p).group, p)
        mismatches = 0
        for k in range(0, 9):
            q = p ** k
            shift = rng.randrange(-10 ** 6, 10 ** 6)
            for (k1, k2), (classes, m) in residue_tables(p, k).items():
                for d in range(q):
                    meets = d % m in classes
                    c1, c2 = geo.cell(d + shift, k1), geo.cell(shift, k2)
                    if geo.cells_disjoint(c1, c2) == meets:
                        mismatches += 1
                    if oracle.disjoint(d + shift, k1, shift, k2) == meets:
                        mismatches += 1
            # membership of c + d in B(c, k), d over a window of p^(k+1) residues
            window = p ** min(k + 1, 8)
            ball = set(range(0, window, q))
            for d in range(window):
                inside = d in ball
                if geo.contains(geo.cell(shift, k), shift + d) != inside:
                    mismatches += 1
                if oracle.contains(shift, k, shift + d) != inside:
                    mismatches += 1
        ok &= mismatches == 0
        rows.append(f"p={p} k<=8 mismatches {mismatches}")

    mpmath.mp.dps = 100
    root5 = mpmath.sqrt(5)
    disagreements = 0
    fib = [1, 1]
    while len(fib) < 80:
        fib.append(fib[-1] + fib[-2])
    for i in range(1000):
        if i % 2:
            # near-ties: Lucas/Fibonacci convergents of sqrt 5
            n = rng.randrange(2, 78)
            luc = fib[n - 1] + fib[n + 1]
            x = QuadraticNumber(Fraction(luc, fib[n]), 0)
            y = QuadraticNumber(0, 1)
        else:
            x = QuadraticNumber(Fraction(rng.randrange(-10 ** 9, 10 ** 9), rng.randrange(1, 10 ** 6)),
                                Fraction(rng.randrange(-10 ** 9, 10 ** 9), rng.randrange(1, 10 ** 6)))
            y = QuadraticNumber(Fraction(rng.randrange(-10 ** 9, 10 ** 9), rng.randrange(1, 10 ** 6)),
                                Fraction(rng.randrange(-10 ** 9, 10 ** 9), rng.randrange(1, 10 ** 6)))
        diff = x - y
        approx = (mpmath.mpf(diff.a.numerator) / diff.a.denominator
                  + mpmath.mpf(diff.b.numerator) / diff.b.denominator * root5)
        if diff.sign() != int(mpmath.sign(approx)):
            disagreements += 1
    ok &= disagreements == 0
    rows.append(f"Q(sqrt5) signs vs 100-digit float: {disagreements}/1000 disagree")
    assert report(7, ok, "; ".join(rows))
