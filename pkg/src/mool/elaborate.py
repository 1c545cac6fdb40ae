"""Elaboration: fold ``where`` equations, add the constructor transition,
synthesise default constructors and tag every call with its kind."""
from __future__ import annotations

from dataclasses import replace

from . import syntax as S
from .diagnostics import Diagnostic, ParseError
from .usage import EPS, Branch, Rec, UVar, Variant, free_vars


class ElaborationError(ParseError):
    pass


def fold_where(usage, equations, span=None):
    """Inline ``where`` equations, turning self-reference into ``rec`` binders.

    Mutually recursive equations become nested binders, e.g.
    ``B = un{u; U}  U = un{r; U + b; B}`` gives ``rec B . un{u; rec U . un{r; U + b; B}}``.
    """
    eqs = dict(equations)

    def resolve(u, bound: tuple[str, ...]):
        if isinstance(u, UVar):
            if u.name in bound:
                return u
            if u.name not in eqs:
                raise ElaborationError([Diagnostic("undefined-usage", f"usage name {u.name} is not defined", span)])
            body = resolve(eqs[u.name], bound + (u.name,))
            if u.name in free_vars(body):
                if not isinstance(body, (Branch, Rec)):
                    raise ElaborationError([Diagnostic(
                        "bad-recursion", f"recursive usage {u.name} must start with a branch state", span)])
                return Rec(u.name, body)
            return body
        if isinstance(u, Branch):
            return Branch(u.qual, tuple((m, resolve(c, bound)) for m, c in u.branches))
        if isinstance(u, Variant):
            return Variant(resolve(u.left, bound), resolve(u.right, bound))
        if isinstance(u, Rec):
            return Rec(u.var, resolve(u.body, bound + (u.var,)))
        return u

    return resolve(usage, ())


def _tag(node):
    """Return ``node`` with call kinds filled in."""
    if isinstance(node, S.Call):
        target = node.target
        if isinstance(target, S.This):
            kind = "self"
        elif isinstance(target, S.FieldRef):
            kind = "field"
            target = _tag(target)
        else:
            kind = "variable"
        return replace(node, target=target, arg=_tag(node.arg), kind=kind)
    if not S.children(node):
        return node
    if isinstance(node, S.FieldRef):
        return node
    if isinstance(node, S.New):
        return replace(node, arg=_tag(node.arg))
    if isinstance(node, S.BinOp):
        return replace(node, left=_tag(node.left), right=_tag(node.right))
    if isinstance(node, S.Not):
        return replace(node, operand=_tag(node.operand))
    if isinstance(node, S.Seq):
        return replace(node, first=_tag(node.first), second=_tag(node.second))
    if isinstance(node, (S.FieldAssign, S.Decl, S.Assign)):
        return replace(node, value=_tag(node.value))
    if isinstance(node, S.If):
        return replace(node, cond=_tag(node.cond), then=_tag(node.then), orelse=_tag(node.orelse))
    if isinstance(node, S.While):
        return replace(node, cond=_tag(node.cond), body=_tag(node.body))
    if isinstance(node, (S.Spawn, S.Frame)):
        return replace(node, body=_tag(node.body))
    return node


def elaborate_class(cls: S.ClassDecl) -> S.ClassDecl:
    usage = cls.usage
    if cls.where or free_vars(usage):
        usage = fold_where(usage, cls.where, cls.span)
    methods = [replace(m, body=_tag(m.body)) for m in cls.methods]
    if cls.constructor is None:
        methods.insert(0, S.MethodDecl(cls.name, S.VOID, S.VOID, "_", S.UNIT))
    if usage == EPS:
        effective = EPS
    else:
        effective = Branch("lin", ((cls.name, usage),))
    return replace(cls, usage=usage, where=(), methods=tuple(methods), effective_usage=effective)


def _check_arity(program: S.Program):
    diags = []
    for cls in program.classes:
        for m in cls.methods:
            for node in S.walk(m.body):
                if isinstance(node, S.New) and node.bare:
                    target = program.cls(node.cls)
                    ctor = target.constructor if target else None
                    if ctor is not None and ctor.param_type != S.VOID:
                        diags.append(Diagnostic(
                            "constructor-arity",
                            f"constructor of {node.cls} expects a {ctor.param_type} argument",
                            node.span, rule="T-New"))
    return diags


def elaborate(program: S.Program) -> S.Program:
    """Idempotent: ``elaborate(elaborate(p)) == elaborate(p)``."""
    out = replace(program, classes=tuple(elaborate_class(c) for c in program.classes))
    diags = _check_arity(out)
    if diags:
        raise ElaborationError(diags)
    return out
