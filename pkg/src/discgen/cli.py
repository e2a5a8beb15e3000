"""Command-line front end: ``construct``, ``verify`` and ``oracle-diff``.

Exit codes: 0 success, 1 failed certificate / invariant violation /
divergence, 2 unusable configuration or unreadable input.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .case1 import Case1Engine, InvariantViolation
from .case2 import Case2Engine
from .budget import parse_budget
from .instances import INSTANCE_NAMES
from .trace import (MAX_STEPS, ConfigError, RunConfig, TraceFormatError, dumps,
                    config_from_header, generate_lines, write_trace)
from .verifier import (CHECKS, MUTATIONS, brute_difference_set, run_mutation_suite,
                       split_text, summarize, verify_trace)

ORACLE_MAX_STEPS = 200
CONFIG_KEYS = {"instance", "p", "steps", "thin", "budget", "out"}


def _short_rational(q: Fraction, limit: int = 120) -> str:
    text = f"{q.numerator}/{q.denominator}"
    if len(text) <= limit:
        return text
    return (f"<{len(str(q.numerator))}-digit>/<{len(str(q.denominator))}-digit> "
            f"~ {float(q):.6g} (exact value in the trace)")


def _load_config(args) -> RunConfig:
    raw: dict = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(raw) - CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in ("instance", "p", "steps", "budget", "out"):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    if getattr(args, "thin", False):
        raw["thin"] = True
    if "instance" not in raw:
        raise ConfigError("--instance is required")
    if "steps" not in raw:
        raise ConfigError("--steps is required")
    args.out = raw.get("out", getattr(args, "out", None))
    return RunConfig(instance=raw["instance"], steps=raw["steps"], p=raw.get("p"),
                     thin=bool(raw.get("thin", False)), budget=raw.get("budget"))


def _covered_prefix(group, diffs) -> int:
    """Largest k with g_0 .. g_{k-1} all in the difference set."""
    k = 0
    while group.element_at(k) in diffs:
        k += 1
    return k


def cmd_construct(args) -> int:
    try:
        config = _load_config(args)
        instance = config.validate()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = args.out or "-"
    lines = []
    try:
        for line in generate_lines(config):
            lines.append(line)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        if exc.certificate is not None:
            print(dumps(exc.certificate), file=sys.stderr)
        return 1
    if out == "-":
        sys.stdout.write("".join(x + "\n" for x in lines))
        report = sys.stderr
    else:
        write_trace(out, lines)
        report = sys.stdout
    records = [json.loads(x) for x in lines[1:]]
    group = instance.group
    if instance.precompact:
        pts = [group.identity] + [group.decode(r[k]) for r in records for k in ("x", "y")]
    else:
        pts = [group.decode(r[k]) for r in records for k in ("x", "gx")]
    pts = list(dict.fromkeys(pts))
    diffs = brute_difference_set(pts, group)
    print(f"instance {instance.name}" + (f" p={instance.p}" if instance.p else "")
          + f"  case {instance.case}  steps {config.steps}  thin {config.thin}", file=report)
    print(f"|A| = {len(pts)}", file=report)
    print(f"covered prefix: g_0 .. g_{_covered_prefix(group, diffs) - 1}", file=report)
    if instance.precompact:
        total = Fraction(records[-1]["measures"]["cumulative"]) if records else \
            Fraction(json.loads(lines[0])["init"]["measure"])
        print(f"measure total = {_short_rational(total)}", file=report)
    if out != "-":
        print(f"wrote {len(lines)} records to {out}", file=report)
    return 0


def cmd_verify(args) -> int:
    try:
        with open(args.path, encoding="ascii") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: cannot read {args.path}: {exc}", file=sys.stderr)
        return 2
    checks = None
    if args.checks:
        checks = [c.strip() for c in args.checks.split(",") if c.strip()]
        bad = [c for c in checks if c not in CHECKS]
        if bad:
            print(f"error: unknown checks {', '.join(bad)}; choose from {', '.join(CHECKS)}",
                  file=sys.stderr)
            return 2
    lines, truncated = split_text(text)
    certs = verify_trace(lines, checks=checks, replay=not args.no_replay,
                         truncated_at=truncated)
    if certs and certs[0].check == "format" and certs[0].stage in (0, None):
        print(f"error: {certs[0].witness['error']}", file=sys.stderr)
        return 2
    print(summarize(certs))
    if args.certificates:
        with open(args.certificates, "w", encoding="ascii") as fh:
            for c in certs:
                fh.write(dumps(c.to_dict()) + "\n")
    ok = all(c.passed for c in certs)
    if args.mutations and ok:
        inst = config_from_header(json.loads(lines[0])).validate()
        results = run_mutation_suite(text, inst)
        print()
        print("mutation    applied  rejected  check      stage")
        for r in results:
            print(f"{r.name:<11} {str(r.applied):<8} {str(r.rejected):<9} {r.check or '-':<10} "
                  f"{'-' if r.stage is None else r.stage}")
        ok = all(r.rejected for r in results if r.applied)
    return 0 if ok else 1


def cmd_oracle_diff(args) -> int:
    try:
        config = _load_config(args)
        instance = config.validate()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if config.steps > ORACLE_MAX_STEPS:
        print(f"error: oracle-diff runs at most {ORACLE_MAX_STEPS} steps", file=sys.stderr)
        return 2
    group = instance.group
    seed = args.seed_divergence
    oracle: set = set()
    pts: list = []
    seen: set = set()

    def absorb(points):
        for p in points:
            if p in seen:
                continue
            seen.add(p)
            pts.append(p)
            for a in pts:
                oracle.add(group.difference(p, a))
                oracle.add(group.difference(a, p))

    if instance.precompact:
        eng = Case1Engine(instance, parse_budget(config.budget_id), config.thin)
        absorb([group.identity])
    else:
        eng = Case2Engine(instance, config.thin)
    for stage in range(1, config.steps + 1):
        eng.step()
        if instance.precompact:
            pair = eng.pairs[-1]
            absorb([pair.x, pair.y])
            claimed = set(eng.diffs)
        else:
            block = eng.blocks[-1]
            absorb([block.x, block.gx])
            claimed = set(eng.covered)
        if seed is not None and stage == seed:
            # debug hook: corrupt the bookkeeping copy to exercise the reporter
            claimed.add(group.element_at(_covered_prefix(group, oracle)))
        if instance.precompact:
            diverged = claimed != oracle
        else:
            diverged = not claimed <= oracle or claimed != {group.element_at(i)
                                                          for i in range(stage)}
        if diverged:
            only_engine = [group.encode(d) for d in claimed - oracle][:5]
            only_oracle = [group.encode(d) for d in oracle - claimed][:5]
            print(f"divergence at stage {stage}: engine-only {only_engine}, "
                  f"oracle-only {only_oracle if instance.precompact else '[]'}")
            return 1
    full = brute_difference_set(pts, group)
    if full != oracle:
        print(f"divergence at stage {config.steps}: incremental oracle disagrees with "
              "full difference set")
        return 1
    print(f"{instance.name}: engine bookkeeping matches the brute-force difference set "
          f"at all {config.steps} stages (|A| = {len(pts)}, |AA^-1| = {len(oracle)})")
    return 0


def _add_run_args(p: argparse.ArgumentParser, max_steps: int):
    p.add_argument("--instance", choices=INSTANCE_NAMES)
    p.add_argument("--p", type=int, help="prime for z-in-zp (at most 97)")
    p.add_argument("--steps", type=int, help=f"number of steps N (at most {max_steps})")
    p.add_argument("--thin", action="store_true", help="keep gA n A finite for g != e")
    p.add_argument("--budget", help="budget rule, e.g. geom-1/16 (Case 1 only)")
    p.add_argument("--config", help="JSON file mirroring these flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="discgen",
        description="Build and check closed discrete sets A with G = A A^-1.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="run the construction and write a JSONL trace")
    _add_run_args(p, MAX_STEPS)
    p.add_argument("--out", help="trace path ('-' for stdout)")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="replay a trace and re-check every invariant")
    p.add_argument("path")
    p.add_argument("--checks", help=f"comma-separated subset of {','.join(CHECKS)}")
    p.add_argument("--certificates", help="write certificates as JSONL here")
    p.add_argument("--no-replay", action="store_true", help="skip the byte-exact replay")
    p.add_argument("--mutations", action="store_true",
                   help=f"also run the mutation suite ({', '.join(MUTATIONS)})")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle-diff", help="compare engine bookkeeping with brute force")
    _add_run_args(p, ORACLE_MAX_STEPS)
    p.add_argument("--seed-divergence", type=int, metavar="STAGE",
                   help="debug hook: corrupt the bookkeeping at STAGE")
    p.set_defaults(func=cmd_oracle_diff)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TraceFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
