"""Small-step interpreter with simulated threads.

A machine state is an immutable value: a heap of object records plus an
ordered tuple of threads, each owning a term and a local store.  ``step``
reduces one thread by one rule.  Internally a step works on mutable copies
(:class:`_Ctx`) that are frozen again afterwards.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Optional

from . import syntax as S
from .syntax import FALSE, NULL_VALUE, TRUE, UNIT, is_value
from .usage import EPS, UNDEFINED, Variant, allows, head, qualifier

INT_MIN = -(2 ** 63)
INT_MAX = 2 ** 63 - 1


class RuntimeFault(Exception):
    """Evaluation fault; ``reason`` is a short identifier."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


class Stuck(RuntimeFault):
    pass


class _Blocked(Exception):
    pass


class LoadError(Exception):
    pass


# -- state ---------------------------------------------------------------------

@dataclass(frozen=True)
class ObjectRecord:
    cls: str
    usage: object
    fields: tuple = ()  # sorted (name, value) pairs; absent means null
    lock: int = 0

    def get(self, name):
        for f, v in self.fields:
            if f == name:
                return v
        return NULL_VALUE


@dataclass(frozen=True)
class Thread:
    term: object
    store: tuple = ()  # sorted (name, value) pairs
    counter: int = 0

    @property
    def done(self) -> bool:
        return is_value(self.term)


@dataclass(frozen=True)
class MachineState:
    heap: tuple = ()  # sorted (oid, ObjectRecord) pairs
    threads: tuple = ()
    next_oid: int = 0

    def record(self, oid) -> ObjectRecord:
        return dict(self.heap)[oid]

    @property
    def terminated(self) -> bool:
        return all(t.done for t in self.threads)


@dataclass
class _Ctx:
    program: S.Program
    heap: dict
    store: dict
    next_oid: int
    counter: int
    spawned: list = field(default_factory=list)


# -- evaluation of pure expressions ------------------------------------------------

def _check_int(n: int) -> int:
    if not INT_MIN <= n <= INT_MAX:
        raise RuntimeFault("overflow", str(n))
    return n


def _lookup(node, h, local):
    if isinstance(node, S.Var):
        if node.name not in local:
            raise RuntimeFault("unbound-variable", node.name)
        return local[node.name]
    obj = node.obj
    if isinstance(obj, S.Var):
        obj = _lookup(obj, h, local)
    if not isinstance(obj, S.ObjRef):
        raise RuntimeFault("null-receiver", f"field {node.name} of null")
    if obj.oid not in h:
        raise RuntimeFault("dangling", f"o{obj.oid}")
    return h[obj.oid].get(node.name)


def _value(e, h, local):
    if isinstance(e, (S.Var, S.FieldRef)):
        return _lookup(e, h, local)
    if isinstance(e, S.BinOp):
        if e.op in S.EQ_OPS or e.op in S.REL_OPS or e.op in S.LOGIC_OPS:
            return TRUE if eval_bool(e, h, local) else FALSE
        return S.IntLit(eval_arith(e, h, local))
    if isinstance(e, S.Not):
        return TRUE if eval_bool(e, h, local) else FALSE
    if isinstance(e, S.IntLit):
        _check_int(e.value)
    if is_value(e):
        return e
    raise RuntimeFault("not-pure", type(e).__name__)


def eval_arith(a, h, local) -> int:
    """Evaluate an integer expression; ``h`` maps object ids to records."""
    if isinstance(a, S.BinOp) and a.op in S.ARITH_OPS:
        x = eval_arith(a.left, h, local)
        y = eval_arith(a.right, h, local)
        if a.op == "+":
            return _check_int(x + y)
        if a.op == "-":
            return _check_int(x - y)
        if a.op == "*":
            return _check_int(x * y)
        if y == 0:
            raise RuntimeFault("division-by-zero")
        q = abs(x) // abs(y)
        return _check_int(q if (x >= 0) == (y >= 0) else -q)
    v = _value(a, h, local)
    if isinstance(v, S.IntLit):
        return _check_int(v.value)
    if isinstance(v, S.NullLit):
        raise RuntimeFault("null-fault", "null in arithmetic")
    raise RuntimeFault("type-fault", "expected an integer")


def eval_bool(b, h, local) -> bool:
    if isinstance(b, S.Not):
        return not eval_bool(b.operand, h, local)
    if isinstance(b, S.BinOp):
        if b.op in S.LOGIC_OPS:
            x, y = eval_bool(b.left, h, local), eval_bool(b.right, h, local)
            return (x and y) if b.op == "&&" else (x or y)
        if b.op in S.EQ_OPS:
            x, y = _value(b.left, h, local), _value(b.right, h, local)
            return (x == y) if b.op == "==" else (x != y)
        if b.op in S.REL_OPS:
            x, y = eval_arith(b.left, h, local), eval_arith(b.right, h, local)
            return {"<": x < y, "<=": x <= y, ">": x > y, ">=": x >= y}[b.op]
    v = _value(b, h, local)
    if isinstance(v, S.BoolLit):
        return v.value
    if isinstance(v, S.NullLit):
        raise RuntimeFault("null-fault", "null in condition")
    raise RuntimeFault("type-fault", "expected a boolean")


def is_pure(e) -> bool:
    if isinstance(e, (S.Var, S.ObjRef)) or is_value(e):
        return True
    if isinstance(e, S.FieldRef):
        return isinstance(e.obj, (S.ObjRef, S.Var))
    if isinstance(e, S.BinOp):
        return is_pure(e.left) and is_pure(e.right)
    if isinstance(e, S.Not):
        return is_pure(e.operand)
    return False


# -- substitution ----------------------------------------------------------------

def _declared_names(body) -> set[str]:
    return {n.name for n in S.walk(body) if isinstance(n, S.Decl)}


def _subst(node, oid: int, names: dict):
    """``node[o/this]`` with locals renamed by ``names`` (call kinds kept)."""
    if isinstance(node, S.This):
        return S.ObjRef(oid)
    if isinstance(node, S.Var):
        return S.Var(names.get(node.name, node.name), node.span)
    if isinstance(node, S.FieldRef):
        return replace(node, obj=_subst(node.obj, oid, names))
    if isinstance(node, S.New):
        return replace(node, arg=_subst(node.arg, oid, names))
    if isinstance(node, S.Call):
        return replace(node, target=_subst(node.target, oid, names), arg=_subst(node.arg, oid, names))
    if isinstance(node, S.BinOp):
        return replace(node, left=_subst(node.left, oid, names), right=_subst(node.right, oid, names))
    if isinstance(node, S.Not):
        return replace(node, operand=_subst(node.operand, oid, names))
    if isinstance(node, S.Seq):
        return replace(node, first=_subst(node.first, oid, names), second=_subst(node.second, oid, names))
    if isinstance(node, S.FieldAssign):
        return replace(node, obj=_subst(node.obj, oid, names), value=_subst(node.value, oid, names))
    if isinstance(node, (S.Decl, S.Assign)):
        return replace(node, name=names.get(node.name, node.name), value=_subst(node.value, oid, names))
    if isinstance(node, S.If):
        return replace(node, cond=_subst(node.cond, oid, names), then=_subst(node.then, oid, names),
                       orelse=_subst(node.orelse, oid, names))
    if isinstance(node, S.While):
        return replace(node, cond=_subst(node.cond, oid, names), body=_subst(node.body, oid, names))
    if isinstance(node, (S.Spawn, S.Frame)):
        return replace(node, body=_subst(node.body, oid, names))
    return node


def _instantiate(ctx: _Ctx, method: S.MethodDecl, oid: int, arg):
    ctx.counter += 1
    k = ctx.counter
    names = {n: f"{n}#{k}" for n in _declared_names(method.body) | {method.param}}
    ctx.store[names[method.param]] = arg
    return _subst(method.body, oid, names)


# -- single steps ----------------------------------------------------------------

def _is_lin_value(v, heap) -> bool:
    return isinstance(v, S.ObjRef) and v.oid in heap and qualifier(heap[v.oid].usage) in ("lin", "variant")


def _set_field(rec: ObjectRecord, name, value) -> ObjectRecord:
    fmap = dict(rec.fields)
    if isinstance(value, S.NullLit):
        fmap.pop(name, None)
    else:
        fmap[name] = value
    return replace(rec, fields=tuple(sorted(fmap.items())))


def _object(ctx: _Ctx, ref):
    """Resolve a receiver without consuming it."""
    if isinstance(ref, S.ObjRef):
        v = ref
    elif isinstance(ref, S.Var):
        if ref.name not in ctx.store:
            raise Stuck("unbound-variable", ref.name)
        v = ctx.store[ref.name]
    elif isinstance(ref, S.FieldRef):
        owner = _object(ctx, ref.obj)
        v = ctx.heap[owner].get(ref.name)
    else:
        raise Stuck("bad-receiver", type(ref).__name__)
    if isinstance(v, S.NullLit):
        raise Stuck("null-receiver", "call or field access on null")
    if not isinstance(v, S.ObjRef):
        raise Stuck("bad-receiver", "not an object")
    return v.oid


def _fault(fn):
    try:
        return fn()
    except Stuck:
        raise
    except RuntimeFault as exc:
        raise Stuck(exc.reason, exc.detail) from None


def _step(ctx: _Ctx, t):
    """Reduce the leftmost redex of ``t``; returns ``(rule, t')``."""
    if isinstance(t, S.Seq):
        if is_value(t.first):
            return "R-Seq", t.second
        rule, first = _step(ctx, t.first)
        return rule, replace(t, first=first)
    if isinstance(t, S.Decl):
        if is_value(t.value):
            ctx.store[t.name] = t.value
            return "R-NewVar", UNIT
        rule, v = _step(ctx, t.value)
        return rule, replace(t, value=v)
    if isinstance(t, S.Assign):
        if is_value(t.value):
            ctx.store[t.name] = t.value
            return "R-AssignVar", UNIT
        rule, v = _step(ctx, t.value)
        return rule, replace(t, value=v)
    if isinstance(t, S.FieldAssign):
        if not is_value(t.value):
            rule, v = _step(ctx, t.value)
            return rule, replace(t, value=v)
        oid = _object(ctx, t.obj)
        ctx.heap[oid] = _set_field(ctx.heap[oid], t.name, t.value)
        return ("R-AssignFieldNull" if isinstance(t.value, S.NullLit) else "R-AssignField"), UNIT
    if isinstance(t, S.If):
        if isinstance(t.cond, S.BoolLit):
            return ("R-IfTrue", t.then) if t.cond.value else ("R-IfFalse", t.orelse)
        rule, c = _step(ctx, t.cond)
        return rule, replace(t, cond=c)
    if isinstance(t, S.While):
        return "R-While", S.If(t.cond, S.Seq(t.body, t), UNIT)
    if isinstance(t, S.Spawn):
        ctx.spawned.append(t.body)
        return "R-Spawn", UNIT
    if isinstance(t, S.Frame):
        if not is_value(t.body):
            rule, b = _step(ctx, t.body)
            return rule, replace(t, body=b)
        rec = ctx.heap[t.oid]
        if t.release:
            rec = replace(rec, lock=0)
        if t.resolve and isinstance(rec.usage, Variant):
            if not isinstance(t.body, S.BoolLit):
                raise Stuck("variant-result", "variant method returned a non-boolean")
            rec = replace(rec, usage=rec.usage.left if t.body.value else rec.usage.right)
        ctx.heap[t.oid] = rec
        return ("R-Release" if t.release else "R-Return"), t.body
    if isinstance(t, S.New):
        if not is_value(t.arg):
            rule, a = _step(ctx, t.arg)
            return rule, replace(t, arg=a)
        return _new(ctx, t)
    if isinstance(t, S.Call):
        if not is_value(t.arg):
            rule, a = _step(ctx, t.arg)
            return rule, replace(t, arg=a)
        return _call(ctx, t)
    if isinstance(t, S.Var):
        if t.name not in ctx.store:
            raise Stuck("unbound-variable", t.name)
        v = ctx.store[t.name]
        if _is_lin_value(v, ctx.heap):
            ctx.store[t.name] = NULL_VALUE
            return "R-LinVar", v
        return "R-UnVar", v
    if isinstance(t, S.FieldRef):
        oid = _object(ctx, t.obj)
        rec = ctx.heap[oid]
        v = rec.get(t.name)
        if isinstance(v, S.NullLit):
            return "R-NullField", v
        if _is_lin_value(v, ctx.heap):
            ctx.heap[oid] = _set_field(rec, t.name, NULL_VALUE)
            return "R-LinField", v
        return "R-UnField", v
    if isinstance(t, (S.BinOp, S.Not)):
        if is_pure(t):
            h, local = ctx.heap, ctx.store
            if isinstance(t, S.BinOp) and t.op in S.ARITH_OPS:
                return "R-Arith", S.IntLit(_fault(lambda: eval_arith(t, h, local)))
            return "R-Bool", (TRUE if _fault(lambda: eval_bool(t, h, local)) else FALSE)
        if isinstance(t, S.Not):
            rule, o = _step(ctx, t.operand)
            return rule, replace(t, operand=o)
        if not is_pure(t.left):
            rule, left = _step(ctx, t.left)
            return rule, replace(t, left=left)
        if not is_value(t.left):
            h, local = ctx.heap, ctx.store
            return "R-Bool" if _is_bool_expr(t.left) else "R-Arith", replace(
                t, left=_fault(lambda: _value(t.left, h, local)))
        rule, right = _step(ctx, t.right)
        return rule, replace(t, right=right)
    if isinstance(t, S.This):
        raise Stuck("unbound-this", "this outside a method")
    raise Stuck("no-rule", type(t).__name__)


def _is_bool_expr(e) -> bool:
    return isinstance(e, S.Not) or (isinstance(e, S.BinOp) and e.op not in S.ARITH_OPS)


def _new(ctx: _Ctx, t: S.New):
    cls = ctx.program.cls(t.cls)
    if cls is None:
        raise Stuck("unknown-class", t.cls)
    ctor = cls.constructor
    oid = ctx.next_oid
    ctx.next_oid += 1
    usage = cls.usage if not cls.unrestricted else EPS
    ctx.heap[oid] = ObjectRecord(cls.name, usage)
    if ctor is None:
        return "R-New", S.ObjRef(oid)
    body = _instantiate(ctx, ctor, oid, t.arg)
    return "R-New", S.Seq(body, S.ObjRef(oid))


def _call(ctx: _Ctx, t: S.Call):
    oid = _object(ctx, t.target)
    rec = ctx.heap[oid]
    cls = ctx.program.cls(rec.cls)
    method = cls.method(t.method) if cls else None
    if method is None:
        raise Stuck("unknown-method", f"{rec.cls}.{t.method}")
    kind = t.kind or ("field" if isinstance(t.target, S.FieldRef) else "variable")
    resolve = False
    if kind == "self":
        rule = "R-Call"
    else:
        rule = "R-FieldCall" if kind == "field" else "R-VarCall"
        nxt = allows(rec.usage, t.method)
        if nxt is UNDEFINED:
            raise Stuck("protocol-violation", f"usage of o{oid} ({rec.cls}) does not allow {t.method}")
        h = head(nxt) if nxt is not EPS else nxt
        resolve = isinstance(h, Variant)
        rec = replace(rec, usage=h if resolve else nxt)
    if method.sync:
        if rec.lock:
            raise _Blocked()
        rec = replace(rec, lock=1)
    ctx.heap[oid] = rec
    body = _instantiate(ctx, method, oid, t.arg)
    if method.sync or resolve:
        body = S.Frame(oid, body, release=method.sync, resolve=resolve)
    return rule, body


# -- state-level API ---------------------------------------------------------------

@dataclass(frozen=True)
class StepResult:
    status: str  # "step" | "stuck" | "blocked" | "done"
    rule: str = ""
    state: Optional[MachineState] = None
    reason: str = ""
    detail: str = ""


def try_step(program: S.Program, state: MachineState, i: int) -> StepResult:
    th = state.threads[i]
    if th.done:
        return StepResult("done")
    ctx = _Ctx(program, dict(state.heap), dict(th.store), state.next_oid, th.counter)
    try:
        rule, term = _step(ctx, th.term)
    except _Blocked:
        return StepResult("blocked", reason="lock-held")
    except RuntimeFault as exc:
        return StepResult("stuck", reason=exc.reason, detail=exc.detail)
    store = tuple(sorted(ctx.store.items()))
    threads = list(state.threads)
    threads[i] = Thread(term, store, ctx.counter)
    for body in ctx.spawned:
        threads.append(Thread(body, store, ctx.counter))
    new = MachineState(tuple(sorted(ctx.heap.items())), tuple(threads), ctx.next_oid)
    return StepResult("step", rule, new)


def step(program: S.Program, state: MachineState, i: int) -> list[tuple[str, MachineState]]:
    """At most one successor: the semantics is deterministic per thread."""
    r = try_step(program, state, i)
    return [(r.rule, r.state)] if r.status == "step" else []


def load(program: S.Program) -> MachineState:
    main = program.cls(program.entry)
    if main is None:
        raise LoadError(f"no entry class {program.entry}")
    if main.method("main") is None:
        raise LoadError(f"class {program.entry} has no main method")
    ref = "$main"
    term = S.seq(
        S.Decl(S.ClassType(main.name), ref, S.New(main.name, UNIT)),
        S.Call(S.Var(ref), "main", UNIT, kind="variable"),
    )
    return MachineState((), (Thread(term),), 0)


@dataclass(frozen=True)
class Outcome:
    kind: str  # "terminated" | "stuck" | "step-limit"
    state: MachineState
    steps: int
    reason: str = ""
    thread: Optional[int] = None


def run(program: S.Program, state: MachineState, seed: int = 0, max_steps: int = 100_000) -> Outcome:
    """Random scheduler; the same seed always yields the same outcome."""
    rng = random.Random(seed)
    steps = 0
    while True:
        pending = [i for i, th in enumerate(state.threads) if not th.done]
        if not pending:
            return Outcome("terminated", state, steps)
        if steps >= max_steps:
            return Outcome("step-limit", state, steps)
        while pending:
            i = pending.pop(rng.randrange(len(pending)))
            r = try_step(program, state, i)
            if r.status == "step":
                state = r.state
                steps += 1
                break
            if r.status == "stuck":
                return Outcome("stuck", state, steps, r.reason, i)
        else:
            return Outcome("stuck", state, steps, "deadlock")


# -- rendering -------------------------------------------------------------------

def format_value(v) -> str:
    from .printer import format_expr
    return format_expr(v)


def format_heap(state: MachineState) -> str:
    from .printer import format_usage
    lines = []
    for oid, rec in state.heap:
        fs = ", ".join(f"{f}={format_value(v)}" for f, v in rec.fields)
        lines.append(f"o{oid}: {rec.cls} usage={format_usage(rec.usage)} lock={rec.lock} {{{fs}}}")
    return "\n".join(lines)
