"""Abstract syntax for Mool programs, including the runtime-only forms.

Statements and expressions share one node family: at runtime a method body
(a statement) replaces the call expression that invoked it.  Every node
carries a ``span`` (byte offsets into the source) that is excluded from
equality, so structurally equal programs compare equal regardless of layout.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

from .usage import EPS, Usage

Span = Optional[tuple[int, int]]


def _span():
    return field(default=None, compare=False, repr=False)


# -- types -------------------------------------------------------------------

@dataclass(frozen=True)
class BaseType:
    name: str  # void | int | bool | null

    def __str__(self):
        return self.name


VOID = BaseType("void")
INT = BaseType("int")
BOOL = BaseType("bool")
NULL = BaseType("null")


@dataclass(frozen=True)
class ClassType:
    """``C[z]``, or the runtime ``C[z; F]`` when ``fields`` is not None.

    ``usage`` is None for a bare class name written in source; what that
    means depends on where it appears (see the typechecker).
    """
    name: str
    usage: Optional[Usage] = None
    fields: Optional[tuple[tuple[str, "Type"], ...]] = None

    def field_map(self) -> dict[str, "Type"]:
        return dict(self.fields or ())

    def with_fields(self, fmap: dict[str, "Type"]) -> "ClassType":
        return replace(self, fields=tuple(sorted(fmap.items())))

    def with_usage(self, usage: Usage) -> "ClassType":
        return replace(self, usage=usage)


Type = Union[BaseType, ClassType]


# -- values --------------------------------------------------------------------

@dataclass(frozen=True)
class UnitLit:
    span: Span = _span()


@dataclass(frozen=True)
class IntLit:
    value: int
    span: Span = _span()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: Span = _span()


@dataclass(frozen=True)
class NullLit:
    span: Span = _span()


@dataclass(frozen=True)
class ObjRef:
    """Runtime object identifier ``o``."""
    oid: int
    span: Span = _span()


UNIT = UnitLit()
NULL_VALUE = NullLit()
TRUE = BoolLit(True)
FALSE = BoolLit(False)

VALUE_TYPES = (UnitLit, IntLit, BoolLit, NullLit, ObjRef)


def is_value(node) -> bool:
    return isinstance(node, VALUE_TYPES)


# -- references and expressions ----------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class This:
    span: Span = _span()


@dataclass(frozen=True)
class FieldRef:
    obj: Union[Var, This, ObjRef]
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class New:
    cls: str
    arg: "Node"
    bare: bool = field(default=False, compare=False, repr=False)
    span: Span = _span()


CALL_KINDS = ("constructor", "self", "variable", "field")


@dataclass(frozen=True)
class Call:
    target: Union[Var, This, FieldRef, ObjRef]
    method: str
    arg: "Node"
    kind: Optional[str] = None
    span: Span = _span()


ARITH_OPS = ("+", "-", "*", "/")
REL_OPS = ("<", "<=", ">", ">=")
EQ_OPS = ("==", "!=")
LOGIC_OPS = ("&&", "||")


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    span: Span = _span()


@dataclass(frozen=True)
class Not:
    operand: "Node"
    span: Span = _span()


# -- statements --------------------------------------------------------------

@dataclass(frozen=True)
class Seq:
    first: "Node"
    second: "Node"
    span: Span = _span()


@dataclass(frozen=True)
class FieldAssign:
    obj: Union[Var, This, ObjRef]
    name: str
    value: "Node"
    span: Span = _span()


@dataclass(frozen=True)
class Decl:
    type: Type
    name: str
    value: "Node"
    span: Span = _span()


@dataclass(frozen=True)
class Assign:
    name: str
    value: "Node"
    span: Span = _span()


@dataclass(frozen=True)
class If:
    cond: "Node"
    then: "Node"
    orelse: "Node"
    span: Span = _span()


@dataclass(frozen=True)
class While:
    cond: "Node"
    body: "Node"
    span: Span = _span()


@dataclass(frozen=True)
class Spawn:
    body: "Node"
    span: Span = _span()


@dataclass(frozen=True)
class Frame:
    """Runtime marker around an active method body.

    When ``body`` becomes a value the lock of ``oid`` is released (sync
    methods) and a variant usage on ``oid`` is resolved by the returned
    boolean.
    """
    oid: int
    body: "Node"
    release: bool = False
    resolve: bool = False
    span: Span = _span()


Node = Union[
    UnitLit, IntLit, BoolLit, NullLit, ObjRef, Var, This, FieldRef, New, Call,
    BinOp, Not, Seq, FieldAssign, Decl, Assign, If, While, Spawn, Frame,
]


def seq(*stmts: Node) -> Node:
    """Right-nested sequential composition; empty means ``unit``."""
    flat = []

    def push(s):
        if isinstance(s, Seq):
            push(s.first)
            push(s.second)
        else:
            flat.append(s)

    for s in stmts:
        push(s)
    stmts = flat
    if not stmts:
        return UNIT
    out = stmts[-1]
    for s in reversed(stmts[:-1]):
        out = Seq(s, out)
    return out


# -- declarations --------------------------------------------------------------

@dataclass(frozen=True)
class FieldDecl:
    type: Type
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class MethodDecl:
    name: str
    return_type: Type
    param_type: Type
    param: str
    body: Node
    sync: bool = False
    span: Span = _span()


@dataclass(frozen=True)
class ClassDecl:
    name: str
    usage: Usage = EPS
    where: tuple[tuple[str, Usage], ...] = ()
    fields: tuple[FieldDecl, ...] = ()
    methods: tuple[MethodDecl, ...] = ()
    effective_usage: Optional[Usage] = None
    span: Span = _span()

    def method(self, name: str) -> Optional[MethodDecl]:
        for m in self.methods:
            if m.name == name:
                return m
        return None

    def field_type(self, name: str) -> Optional[Type]:
        for f in self.fields:
            if f.name == name:
                return f.type
        return None

    @property
    def constructor(self) -> Optional[MethodDecl]:
        return self.method(self.name)

    @property
    def unrestricted(self) -> bool:
        return self.usage == EPS


@dataclass(frozen=True)
class Program:
    classes: tuple[ClassDecl, ...] = ()
    entry: str = "Main"

    def cls(self, name: str) -> Optional[ClassDecl]:
        for c in self.classes:
            if c.name == name:
                return c
        return None


def children(node) -> tuple:
    """Direct sub-nodes of an AST node, in evaluation order."""
    if isinstance(node, FieldRef):
        return (node.obj,)
    if isinstance(node, New):
        return (node.arg,)
    if isinstance(node, Call):
        return (node.target, node.arg)
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, Not):
        return (node.operand,)
    if isinstance(node, Seq):
        return (node.first, node.second)
    if isinstance(node, FieldAssign):
        return (node.obj, node.value)
    if isinstance(node, (Decl, Assign)):
        return (node.value,)
    if isinstance(node, If):
        return (node.cond, node.then, node.orelse)
    if isinstance(node, While):
        return (node.cond, node.body)
    if isinstance(node, (Spawn, Frame)):
        return (node.body,)
    return ()


def walk(node):
    yield node
    for c in children(node):
        yield from walk(c)
