"""JSONL trace format: one header line, then one record per step.

Header::

    {"format":1,"instance":"z-in-zp","p":2,"case":1,"budget":"geom-1/16",
     "thin":false,"enum":"zigzag","steps":50,"random_free":true,
     "init":{...},"digest":"<sha256 of the config fields>"}

Case 1 records carry the target, the chosen pair, the shared U size, the new
z-entries and the exact measure ledger; Case 2 records carry ``g, x, gx``.
Every number is an exact string, so the encoding is byte-stable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from .budget import DEFAULT_BUDGET, BudgetError, parse_budget
from .case1 import Case1Engine, StepTrace
from .case2 import Case2Engine, Case2Trace
from .exact import format_rational
from .instances import Instance, InstanceError, make_instance

FORMAT_VERSION = 1
MAX_STEPS = 10_000
CONFIG_FIELDS = ("format", "instance", "p", "case", "budget", "thin", "enum", "steps",
                 "random_free")


class TraceFormatError(ValueError):
    """Malformed or inconsistent trace input; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    instance: str
    steps: int
    p: int | None = None
    thin: bool = False
    budget: str | None = None
    random_free: bool = True

    def validate(self) -> Instance:
        """Resolve the instance; raise ConfigError for anything unusable."""
        if not isinstance(self.steps, int) or isinstance(self.steps, bool) or self.steps < 0:
            raise ConfigError(f"steps must be a non-negative integer, got {self.steps!r}")
        if self.steps > MAX_STEPS:
            raise ConfigError(f"steps must be at most {MAX_STEPS}, got {self.steps}")
        if self.p is not None and (not isinstance(self.p, int) or isinstance(self.p, bool)):
            raise ConfigError(f"p must be an integer, got {self.p!r}")
        try:
            instance = make_instance(self.instance, self.p)
        except InstanceError as exc:
            raise ConfigError(str(exc)) from exc
        if instance.precompact:
            try:
                parse_budget(self.budget_id).certify()
            except BudgetError as exc:
                raise ConfigError(str(exc)) from exc
        elif self.budget is not None:
            raise ConfigError(f"{self.instance} is not precompact; --budget does not apply")
        return instance

    @property
    def budget_id(self) -> str:
        return self.budget or DEFAULT_BUDGET.identifier


def dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=True)


def config_digest(fields: dict) -> str:
    canon = json.dumps({k: fields[k] for k in CONFIG_FIELDS}, sort_keys=True,
                       separators=(",", ":"))
    return hashlib.sha256(canon.encode("ascii")).hexdigest()


def encode_cell(instance: Instance, center, size) -> dict:
    return {"center": instance.group.encode(center),
            "size": instance.geometry.encode_size(size)}


def make_header(config: RunConfig, instance: Instance, init=None) -> dict:
    header = {
        "format": FORMAT_VERSION,
        "instance": instance.name,
        "p": instance.p,
        "case": instance.case,
        "budget": config.budget_id if instance.precompact else None,
        "thin": bool(config.thin),
        "enum": instance.group.enumeration,
        "steps": config.steps,
        "random_free": True,
    }
    if init is not None:
        header["init"] = init
    header["digest"] = config_digest(header)
    return header


def encode_case1_step(instance: Instance, t: StepTrace) -> dict:
    enc, e = instance.group.encode, instance.group.identity
    return {
        "step": t.step,
        "case": 1,
        "target_index": t.target_index,
        "target": enc(t.target),
        "x": enc(t.x),
        "y": enc(t.y),
        "U": encode_cell(instance, e, t.size),
        "z_new": [{"z": enc(z.z), "V": encode_cell(instance, e, z.size)} for z in t.z_new],
        "measures": {"step": format_rational(t.step_measure),
                     "cumulative": format_rational(t.cumulative)},
    }


def encode_case2_step(instance: Instance, t: Case2Trace) -> dict:
    enc = instance.group.encode
    return {"step": t.step, "case": 2, "g": enc(t.g), "x": enc(t.x), "gx": enc(t.gx)}


def generate_lines(config: RunConfig) -> Iterator[str]:
    """Run the engine for ``config`` and yield the trace lines (no newlines)."""
    instance = config.validate()
    if instance.precompact:
        eng = Case1Engine(instance, parse_budget(config.budget_id), config.thin)
        first = eng.pairs[0]
        init = {"x": instance.group.encode(first.x), "y": instance.group.encode(first.y),
                "U": encode_cell(instance, instance.group.identity, first.size),
                "measure": format_rational(eng.cumulative)}
        yield dumps(make_header(config, instance, init))
        for _ in range(config.steps):
            yield dumps(encode_case1_step(instance, eng.step()))
    else:
        eng = Case2Engine(instance, config.thin)
        yield dumps(make_header(config, instance))
        for _ in range(config.steps):
            yield dumps(encode_case2_step(instance, eng.step()))


def write_trace(path, lines) -> int:
    """Write lines to ``path``; returns the record count (header included)."""
    count = 0
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")
            count += 1
    return count


def config_from_header(header: dict) -> RunConfig:
    try:
        return RunConfig(instance=header["instance"], steps=header["steps"], p=header["p"],
                         thin=header["thin"], budget=header["budget"])
    except KeyError as exc:
        raise TraceFormatError(f"header lacks field {exc.args[0]!r}", 1) from None


def parse_lines(lines: list[str]) -> tuple[dict, list[dict]]:
    """Split raw lines into header and records; structural errors only."""
    if not lines:
        raise TraceFormatError("empty trace", 1)
    parsed = []
    for no, raw in enumerate(lines, 1):
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"malformed JSON ({exc.msg})", no) from None
        if not isinstance(obj, dict):
            raise TraceFormatError("record is not an object", no)
        parsed.append(obj)
    header = parsed[0]
    if header.get("format") != FORMAT_VERSION:
        raise TraceFormatError(f"unsupported format {header.get('format')!r}", 1)
    missing = [k for k in CONFIG_FIELDS + ("digest",) if k not in header]
    if missing:
        raise TraceFormatError(f"header lacks {', '.join(missing)}", 1)
    return header, parsed[1:]


def read_lines(path) -> list[str]:
    """Lines of a trace file; a final line without newline marks truncation."""
    try:
        text = Path(path).read_text(encoding="ascii")
    except UnicodeDecodeError:
        raise TraceFormatError("trace is not ASCII") from None
    if text and not text.endswith("\n"):
        raise TraceFormatError("truncated final record (no trailing newline)",
                               text.count("\n") + 1)
    return text.split("\n")[:-1] if text else []
