"""Mool: a concurrent object language whose classes carry usage protocols.

Typical use::

    from mool import load_program, check_program, load, run
    prog = load_program(source)
    assert not check_program(prog)
    outcome = run(prog, load(prog), seed=0)
"""
from .diagnostics import Diagnostic, ParseError
from .elaborate import ElaborationError, elaborate
from .explore import ReductionGraph, explore, to_dot
from .interp import LoadError, MachineState, Outcome, RuntimeFault, eval_arith, eval_bool, load, run, step
from .parser import parse_expr, parse_program, parse_stmt, parse_usage
from .printer import format_program, format_usage
from .typecheck import check_program


def load_program(source: str):
    """Parse and elaborate source text."""
    return elaborate(parse_program(source))


def check_source(source: str) -> list[Diagnostic]:
    """Diagnostics for a source text, parse and elaboration errors included."""
    try:
        program = load_program(source)
    except ParseError as exc:
        return list(exc.diagnostics)
    return check_program(program)


__all__ = [
    "Diagnostic", "ElaborationError", "LoadError", "MachineState", "Outcome", "ParseError",
    "ReductionGraph", "RuntimeFault", "check_program", "check_source", "elaborate", "eval_arith",
    "eval_bool", "explore", "format_program", "format_usage", "load", "load_program", "parse_expr",
    "parse_program", "parse_stmt", "parse_usage", "run", "step", "to_dot",
]
