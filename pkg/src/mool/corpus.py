"""Manifest-driven corpus runner.

A manifest is a tab-separated text file with lines
``id  mode  path  expected``; blank lines and ``#`` comments are skipped.
Paths are relative to the manifest.  Expectations:

* mode ``check``: ``accept`` or ``reject:<code-or-rule>``
* mode ``run``: ``terminated``, ``stuck`` or ``step-limit``
* mode ``graph``: comma-separated properties such as ``stuck=0``,
  ``stuck>=1``, ``terminals=1`` or ``reason=protocol-violation``
"""
from __future__ import annotations

import operator
import re
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .diagnostics import ParseError
from .elaborate import elaborate
from .explore import explore
from .interp import LoadError, load, run
from .parser import parse_program
from .typecheck import check_program

MODES = ("check", "run", "graph")


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    mode: str
    path: Path
    expected: str


@dataclass(frozen=True)
class EntryResult:
    entry: CorpusEntry
    verdict: str
    passed: bool
    seconds: float


@dataclass
class Report:
    results: list
    seconds: float
    warnings: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list[str]:
        return [r.entry.id for r in self.results if not r.passed]


def default_manifest() -> Path:
    return Path(str(resources.files("mool") / "corpus" / "manifest.tsv"))


def load_manifest(path) -> list[CorpusEntry]:
    path = Path(path)
    entries, seen = [], set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4 or parts[1] not in MODES:
            raise ValueError(f"{path}:{lineno}: malformed manifest line")
        eid, mode, rel, expected = (p.strip() for p in parts)
        if eid in seen:
            raise ValueError(f"{path}:{lineno}: duplicate id {eid}")
        seen.add(eid)
        entries.append(CorpusEntry(eid, mode, path.parent / rel, expected))
    return entries


_PROP = re.compile(r"^(nodes|edges|stuck|terminals)(>=|<=|=)(\d+)$")
_OPS = {"=": operator.eq, ">=": operator.ge, "<=": operator.le}


def _graph_ok(graph, expected: str) -> bool:
    for prop in filter(None, (p.strip() for p in expected.split(","))):
        if prop.startswith("reason="):
            if prop[len("reason="):] not in graph.stuck.values():
                return False
            continue
        m = _PROP.match(prop)
        if not m:
            raise ValueError(f"unknown graph property {prop!r}")
        key, op, n = m.group(1), m.group(2), int(m.group(3))
        value = {"nodes": len(graph.nodes), "edges": len(graph.edges),
                 "stuck": len(graph.stuck), "terminals": len(graph.terminal_nodes())}[key]
        if not _OPS[op](value, n):
            return False
    return True


def run_entry(entry: CorpusEntry, seed: int = 0, max_steps: int = 100_000, max_states: int = 10_000):
    """Returns ``(verdict, passed)``."""
    try:
        program = elaborate(parse_program(entry.path.read_text(encoding="utf-8")))
    except ParseError as exc:
        d = exc.diagnostics[0]
        verdict = f"reject:{d.code}"
        return verdict, entry.expected in (verdict, f"reject:{d.rule}") and entry.mode == "check"
    if entry.mode == "check":
        diags = check_program(program)
        if not diags:
            return "accept", entry.expected == "accept"
        verdict = f"reject:{diags[0].code}" + (f" ({diags[0].rule})" if diags[0].rule else "")
        wanted = entry.expected.partition(":")[2]
        ok = entry.expected.startswith("reject") and (not wanted or any(wanted in (d.code, d.rule) for d in diags))
        return verdict, ok
    try:
        state = load(program)
    except LoadError as exc:
        return f"load-error:{exc}", False
    if entry.mode == "run":
        outcome = run(program, state, seed=seed, max_steps=max_steps)
        verdict = outcome.kind if outcome.kind != "stuck" else f"stuck:{outcome.reason}"
        return verdict, outcome.kind == entry.expected or verdict == entry.expected
    graph = explore(program, state, max_states)
    verdict = f"nodes={len(graph.nodes)},stuck={len(graph.stuck)}" + (",truncated" if graph.truncated else "")
    return verdict, not graph.truncated and _graph_ok(graph, entry.expected)


def run_corpus(manifest=None, **kwargs) -> Report:
    manifest = Path(manifest) if manifest is not None else default_manifest()
    entries = sorted(load_manifest(manifest), key=lambda e: e.id)
    warnings = [] if entries else [f"{manifest}: manifest has no entries"]
    start = time.perf_counter()
    results = []
    for e in entries:
        t0 = time.perf_counter()
        verdict, ok = run_entry(e, **kwargs)
        results.append(EntryResult(e, verdict, ok, time.perf_counter() - t0))
    return Report(results, time.perf_counter() - start, warnings)


def format_report(report: Report, timings: bool = False) -> str:
    lines = [f"warning: {w}" for w in report.warnings]
    for r in report.results:
        status = "PASS" if r.passed else "FAIL"
        extra = f"  {r.seconds * 1000:.0f}ms" if timings else ""
        lines.append(f"{status}  {r.entry.id:<6} {r.entry.mode:<6} expected={r.entry.expected:<22} got={r.verdict}{extra}")
    n = len(report.results)
    ok = sum(r.passed for r in report.results)
    lines.append(f"{ok}/{n} entries passed")
    if report.failures:
        lines.append("failed: " + ", ".join(report.failures))
    return "\n".join(lines)
