"""Canonical pretty-printer.  ``parse(format(p)) == p`` up to spans."""
from __future__ import annotations

from . import syntax as S
from .usage import Branch, Eps, Rec, UVar, Variant

INDENT = "    "

_PREC = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4, "+": 5, "-": 5, "*": 6, "/": 6}


def format_usage(u) -> str:
    if isinstance(u, Eps):
        return "eps"
    if isinstance(u, Branch):
        if u.qual == "un" and not u.branches:
            return "end"
        inner = " + ".join(f"{m}; {format_usage(c)}" for m, c in u.branches)
        return f"{u.qual}{{{inner}}}"
    if isinstance(u, Variant):
        return f"<{format_usage(u.left)} + {format_usage(u.right)}>"
    if isinstance(u, Rec):
        return f"rec {u.var} . {format_usage(u.body)}"
    if isinstance(u, UVar):
        return u.name
    raise TypeError(f"not a usage: {u!r}")


def format_type(t) -> str:
    if isinstance(t, S.BaseType):
        return t.name
    out = t.name
    if t.usage is not None:
        out += f"[{format_usage(t.usage)}"
        if t.fields is not None:
            fs = ", ".join(f"{f}: {format_type(ft)}" for f, ft in t.fields)
            out += f"; {{{fs}}}"
        out += "]"
    return out


def format_expr(e, prec: int = 0) -> str:
    if isinstance(e, S.UnitLit):
        return "unit"
    if isinstance(e, S.IntLit):
        return str(e.value)
    if isinstance(e, S.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, S.NullLit):
        return "null"
    if isinstance(e, S.ObjRef):
        return f"o{e.oid}"
    if isinstance(e, S.Var):
        return e.name
    if isinstance(e, S.This):
        return "this"
    if isinstance(e, S.FieldRef):
        return f"{format_expr(e.obj, 99)}.{e.name}"
    if isinstance(e, S.New):
        return f"new {e.cls}({format_expr(e.arg)})"
    if isinstance(e, S.Call):
        return f"{format_expr(e.target, 99)}.{e.method}({format_expr(e.arg)})"
    if isinstance(e, S.Not):
        return f"!{format_expr(e.operand, 7)}"
    if isinstance(e, S.BinOp):
        p = _PREC[e.op]
        text = f"{format_expr(e.left, p)} {e.op} {format_expr(e.right, p + 1)}"
        return f"({text})" if p < prec else text
    # statements in expression position only arise at runtime
    return "{ " + " ".join(format_stmt(e, 0).split()) + " }"


def _block(s, depth: int) -> str:
    if isinstance(s, S.UnitLit):
        return "{ }"
    body = format_stmt(s, depth + 1)
    return "{\n" + body + "\n" + INDENT * depth + "}"


def format_stmt(s, depth: int = 0) -> str:
    pad = INDENT * depth
    if isinstance(s, S.Seq):
        first = format_stmt(s.first, depth)
        return first + ";\n" + format_stmt(s.second, depth)
    if isinstance(s, S.Decl):
        return f"{pad}{format_type(s.type)} {s.name} = {format_expr(s.value)}"
    if isinstance(s, S.Assign):
        return f"{pad}{s.name} = {format_expr(s.value)}"
    if isinstance(s, S.FieldAssign):
        return f"{pad}{format_expr(s.obj, 99)}.{s.name} = {format_expr(s.value)}"
    if isinstance(s, S.If):
        out = f"{pad}if ({format_expr(s.cond)}) {_block(s.then, depth)}"
        if not isinstance(s.orelse, S.UnitLit):
            out += f" else {_block(s.orelse, depth)}"
        return out
    if isinstance(s, S.While):
        return f"{pad}while ({format_expr(s.cond)}) {_block(s.body, depth)}"
    if isinstance(s, S.Spawn):
        return f"{pad}spawn {_block(s.body, depth)}"
    if isinstance(s, S.Frame):
        return f"{pad}frame o{s.oid} {_block(s.body, depth)}"
    return pad + format_expr(s)


def format_method(m: S.MethodDecl, depth: int = 1) -> str:
    pad = INDENT * depth
    sync = "sync " if m.sync else ""
    return (
        f"{pad}{sync}{format_type(m.return_type)} {m.name}({format_type(m.param_type)} {m.param}) "
        + _block(m.body, depth)
    )


def format_class(c: S.ClassDecl) -> str:
    lines = [f"class {c.name} {{"]
    if c.usage != S.EPS:
        u = f"{INDENT}usage {format_usage(c.usage)}"
        if c.where:
            eqs = "".join(f"\n{INDENT * 2}{n} = {format_usage(z)}" for n, z in c.where)
            u += " where" + eqs
        lines.append(u + ";")
    for f in c.fields:
        lines.append(f"{INDENT}{format_type(f.type)} {f.name};")
    for m in c.methods:
        lines.append(format_method(m))
    lines.append("}")
    return "\n".join(lines)


def format_program(p: S.Program) -> str:
    return "\n\n".join(format_class(c) for c in p.classes) + ("\n" if p.classes else "")
