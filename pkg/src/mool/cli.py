"""Command-line front end: ``mool check|run|graph|fmt|corpus``.

Exit codes: 0 success; 1 type errors, stuck run or corpus mismatch;
2 unreadable or unparsable input; 3 step or state limit reached.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .corpus import format_report, run_corpus
from .diagnostics import ParseError
from .elaborate import ElaborationError, elaborate
from .explore import canonicalize, explore, to_dot
from .interp import LoadError, format_heap, load, run
from .parser import parse_program
from .printer import format_program
from .typecheck import check_program


class _InputError(Exception):
    def __init__(self, lines):
        self.lines = lines


def _line_col(data: bytes, offset: int) -> str:
    before = data[:offset]
    line = before.count(b"\n") + 1
    col = offset - (before.rfind(b"\n") + 1) + 1
    return f"{line}:{col}"


def _render(path, data: bytes, diags, as_json: bool) -> list[str]:
    if as_json:
        return [d.to_json() for d in diags]
    out = []
    for d in diags:
        where = _line_col(data, d.span[0]) if d.span else "-"
        rule = f" ({d.rule})" if d.rule else ""
        out.append(f"{path}:{where}: {d.severity}[{d.code}]{rule}: {d.message}")
    return out


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise _InputError([f"{path}: cannot read: {exc.strerror}"]) from None


def _parse(path, data, as_json=False):
    """Parse only; parse errors become exit 2."""
    try:
        return parse_program(data.decode("utf-8"))
    except UnicodeDecodeError:
        raise _InputError([f"{path}: not valid UTF-8"]) from None
    except ParseError as exc:
        raise _InputError(_render(path, data, exc.diagnostics, as_json)) from None


def cmd_check(args) -> int:
    data = _read(args.path)
    program = _parse(args.path, data, args.json)
    try:
        diags = check_program(elaborate(program))
    except ElaborationError as exc:
        diags = exc.diagnostics
    for line in _render(args.path, data, diags, args.json):
        print(line)
    if not diags and not args.json:
        print(f"{args.path}: ok")
    return 1 if diags else 0


def _load_checked(path, data, warn=True):
    program = _parse(path, data)
    try:
        program = elaborate(program)
    except ElaborationError as exc:
        raise _InputError(_render(path, data, exc.diagnostics, False)) from None
    diags = check_program(program)
    if diags and warn:
        print(f"warning: {path} does not typecheck ({len(diags)} diagnostic(s)); running anyway",
              file=sys.stderr)
    try:
        return program, load(program)
    except LoadError as exc:
        raise _InputError([f"{path}: {exc}"]) from None


def cmd_run(args) -> int:
    data = _read(args.path)
    program, state = _load_checked(args.path, data)
    outcome = run(program, state, seed=args.seed, max_steps=args.max_steps)
    if outcome.kind == "stuck":
        where = f" in thread {outcome.thread}" if outcome.thread is not None else ""
        print(f"stuck after {outcome.steps} steps{where}: {outcome.reason}")
    else:
        print(f"{outcome.kind} after {outcome.steps} steps")
    heap = format_heap(canonicalize(outcome.state))
    if heap:
        print(heap)
    return {"terminated": 0, "stuck": 1, "step-limit": 3}[outcome.kind]


def cmd_graph(args) -> int:
    data = _read(args.path)
    program, state = _load_checked(args.path, data)
    graph = explore(program, state, args.max_states)
    dot = to_dot(graph)
    if args.dot == "-":
        sys.stdout.write(dot)
    elif args.dot:
        Path(args.dot).write_text(dot, encoding="utf-8")
    reasons = sorted(set(graph.stuck.values()))
    print(f"nodes={len(graph.nodes)} edges={len(graph.edges)} stuck={len(graph.stuck)}"
          + (f" reasons={','.join(reasons)}" if reasons else "")
          + (" truncated" if graph.truncated else ""))
    return 3 if graph.truncated else 0


def cmd_fmt(args) -> int:
    data = _read(args.path)
    text = format_program(_parse(args.path, data))
    if args.check:
        same = text == data.decode("utf-8")
        if not same:
            print(f"{args.path}: not canonically formatted")
        return 0 if same else 1
    sys.stdout.write(text)
    return 0


def cmd_corpus(args) -> int:
    try:
        report = run_corpus(args.manifest)
    except (OSError, ValueError) as exc:
        print(f"corpus: {exc}", file=sys.stderr)
        return 2
    print(format_report(report, timings=args.timings))
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mool", description="Typestate checker and interpreter for Mool programs")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="typecheck a program")
    p.add_argument("path")
    p.add_argument("--json", action="store_true", help="emit diagnostics as JSON lines")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("run", help="run a program with a seeded random scheduler")
    p.add_argument("path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=100_000)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("graph", help="explore every interleaving")
    p.add_argument("path")
    p.add_argument("--dot", metavar="OUT", help="write the reduction graph as DOT ('-' for stdout)")
    p.add_argument("--max-states", type=int, default=10_000)
    p.set_defaults(fn=cmd_graph)

    p = sub.add_parser("fmt", help="print the canonical formatting")
    p.add_argument("path")
    p.add_argument("--check", action="store_true", help="only report whether the file is canonical")
    p.set_defaults(fn=cmd_fmt)

    p = sub.add_parser("corpus", help="run a corpus manifest (default: the bundled one)")
    p.add_argument("manifest", nargs="?")
    p.add_argument("--timings", action="store_true")
    p.set_defaults(fn=cmd_corpus)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except _InputError as exc:
        for line in exc.lines:
            print(line, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
