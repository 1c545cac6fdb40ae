"""Typestate checker.

Classes with a usage are checked by walking the usage: every branch types the
named method body starting from the object's current field map ``F`` and
continues with the resulting map.  Unrestricted classes check each method in
isolation.  Typing is flow-sensitive; every judgement maps an environment to
a type and a new environment.

A bare class name ``C`` means different things by position: in parameter and
return types it is ``C`` at its declared usage (a freshly built object); in
field and local declarations it only fixes the class, and the environment
records whatever usage the assigned value actually has.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import syntax as S
from .diagnostics import Diagnostic
from .printer import format_type, format_usage
from .syntax import BOOL, INT, NULL, VOID, ClassType
from .usage import (
    END, EPS, UNDEFINED, Branch, Eps, Rec, UVar, Variant, allows, check_usage,
    free_vars, head, is_linear, usages_equivalent,
)

THIS = "this"

Env = dict  # reference name (local or "this") -> Type

_OP_RULES = {
    "+": "T-Add", "-": "T-Sub", "*": "T-Mult", "/": "T-Div",
    "<": "T-Less", ">": "T-Greater", "<=": "T-LeEqual", ">=": "T-GtEqual",
    "==": "T-Eq", "!=": "T-Diff", "&&": "T-And", "||": "T-Or",
}


class CheckError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(str(diagnostic))
        self.diagnostic = diagnostic


def _fail(code, message, node=None, rule=""):
    span = getattr(node, "span", None) if node is not None else None
    raise CheckError(Diagnostic(code, message, span, rule))


# -- type predicates ---------------------------------------------------------

def is_lin_type(t) -> bool:
    return isinstance(t, ClassType) and t.usage is not None and is_linear(t.usage)


def is_un_type(t) -> bool:
    return not is_lin_type(t)


def types_equal(t1, t2) -> bool:
    if isinstance(t1, ClassType) and isinstance(t2, ClassType):
        if t1.name != t2.name:
            return False
        if (t1.usage is None) != (t2.usage is None):
            return False
        if t1.usage is not None and not usages_equivalent(t1.usage, t2.usage):
            return False
        if (t1.fields is None) != (t2.fields is None):
            return False
        if t1.fields is None:
            return True
        f1, f2 = t1.field_map(), t2.field_map()
        return f1.keys() == f2.keys() and all(types_equal(f1[k], f2[k]) for k in f1)
    return t1 == t2


def agree(t, t2) -> bool:
    if t == NULL or t2 == NULL:
        return True
    if isinstance(t, ClassType) and isinstance(t2, ClassType):
        if t.name != t2.name:
            return False
        if t.usage is None or t2.usage is None:
            return True
        return usages_equivalent(t.usage, t2.usage)
    return t == t2


def _completed_type(t) -> bool:
    if not isinstance(t, ClassType) or t.usage is None:
        return True
    h = head(t.usage)
    return isinstance(h, Eps) or h == END


def _flat(env: Env) -> dict:
    """Environment with ``this`` expanded into ``this.f`` entries."""
    out = {}
    for r, t in env.items():
        if r == THIS and isinstance(t, ClassType) and t.fields is not None:
            for f, ft in t.fields:
                out[f"{THIS}.{f}"] = ft
        else:
            out[r] = t
    return out


def modified(before: Env, after: Env) -> set[str]:
    """References bound in ``after`` that are new or changed; fields of
    ``this`` are reported as ``this.f``."""
    b, a = _flat(before), _flat(after)
    return {r for r, t in a.items() if r not in b or not types_equal(b[r], t)}


def completed(before: Env, after: Env) -> bool:
    a = _flat(after)
    return all(_completed_type(a[r]) for r in modified(before, after))


def env_equal(g1: Env, g2: Env) -> bool:
    return g1.keys() == g2.keys() and all(types_equal(g1[k], g2[k]) for k in g1)


def _merge_type(t1, t2, ref, node):
    if types_equal(t1, t2):
        return t1
    if isinstance(t1, ClassType) and isinstance(t2, ClassType) and t1.name == t2.name:
        if t1.fields is not None and t2.fields is not None:
            f1, f2 = t1.field_map(), t2.field_map()
            if f1.keys() != f2.keys():
                _fail("branch-merge", f"branches initialise different fields of {ref}", node, "T-If")
            return t1.with_fields({k: _merge_type(f1[k], f2[k], f"{ref}.{k}", node) for k in f1})
        if t1.usage is not None and t2.usage is not None and t1.fields is None and t2.fields is None:
            return ClassType(t1.name, Variant(t1.usage, t2.usage))
    _fail("branch-merge", f"branches disagree on {ref}: {format_type(t1)} vs {format_type(t2)}", node, "T-If")


def merge_branch_envs(g1: Env, g2: Env, base: Optional[Env] = None, node=None) -> Env:
    """Join the environments produced by the two arms of a conditional.

    Objects of one class left at different usages merge to the variant
    ``<u1 + u2>``.  Unrestricted bindings introduced inside only one arm are
    dropped when ``base`` (the environment before the conditional) is given.
    """
    out = {}
    for r in sorted(set(g1) | set(g2)):
        if r in g1 and r in g2:
            out[r] = _merge_type(g1[r], g2[r], r, node)
            continue
        t = g1.get(r, g2.get(r))
        if base is not None and r not in base and is_un_type(t):
            continue
        _fail("branch-merge", f"{r} is bound in only one branch", node, "T-If")
    return out


def usage_str(u) -> str:
    return format_usage(u)


# -- checker -------------------------------------------------------------------

@dataclass
class _Scope:
    cls: S.ClassDecl
    declared: dict = field(default_factory=dict)


class Checker:
    """Holds the per-program method evaluation table used by self calls."""

    def __init__(self, program: S.Program):
        self.program = program
        self.evaluated: dict[tuple[str, str], bool] = {
            (c.name, m.name): False for c in program.classes for m in c.methods
        }
        self.scope: Optional[_Scope] = None

    # -- helpers -------------------------------------------------------------

    def class_of(self, name, node=None) -> S.ClassDecl:
        cls = self.program.cls(name)
        if cls is None:
            _fail("unknown-class", f"class {name} is not declared", node)
        return cls

    def resolve_sig(self, t, node=None):
        """Parameter/return types: a bare class name means its declared usage."""
        if isinstance(t, ClassType):
            cls = self.class_of(t.name, node)
            if t.usage is None:
                return ClassType(t.name, cls.usage)
            if free_vars(t.usage):
                _fail("undefined-usage", f"usage in type {format_type(t)} has unbound names", node)
        return t

    def validate_decl_type(self, t, node=None):
        if isinstance(t, ClassType):
            self.class_of(t.name, node)
            if t.usage is not None and free_vars(t.usage):
                _fail("undefined-usage", f"usage in type {format_type(t)} has unbound names", node)
        return t

    def this_type(self, env: Env, node=None) -> ClassType:
        t = env.get(THIS)
        if not isinstance(t, ClassType):
            _fail("no-this", "no receiver in scope", node)
        return t

    def _with_scope(self, cls, fn):
        saved = self.scope
        self.scope = _Scope(cls)
        try:
            return fn()
        finally:
            self.scope = saved

    def type_body(self, cls: S.ClassDecl, method: S.MethodDecl, this_t: ClassType, rule: str):
        """Type a method body from ``{this: this_t, x: t'}``; returns the new
        receiver type and the (resolved) return type."""
        ptype = self.resolve_sig(method.param_type, method)
        ret = self.resolve_sig(method.return_type, method)

        def run():
            self.scope.declared[method.param] = ptype
            env = {THIS: this_t, method.param: ptype}
            return self.type_stmt(env, method.body)

        bt, benv = self._with_scope(cls, run)
        if not agree(ret, bt):
            _fail("body-type",
                  f"body of {cls.name}.{method.name} has type {format_type(bt)}, declared {format_type(ret)}",
                  method, rule)
        if method.param in benv and is_lin_type(benv[method.param]):
            _fail("param-residue",
                  f"linear parameter {method.param} of {cls.name}.{method.name} is not consumed",
                  method, rule)
        return benv[THIS], ret

    # -- receivers -----------------------------------------------------------

    def get_receiver(self, env: Env, w, node):
        if isinstance(w, S.Var):
            if w.name not in env:
                self._missing(w.name, node)
            return env[w.name]
        if isinstance(w, S.FieldRef):
            if not isinstance(w.obj, S.This):
                _fail("field-access", "fields are only accessible through this", node)
            this_t = self.this_type(env, node)
            return this_t.field_map().get(w.name, NULL)
        _fail("bad-receiver", "unsupported call receiver", node)

    def set_receiver(self, env: Env, w, t) -> Env:
        if isinstance(w, S.Var):
            return {**env, w.name: t}
        this_t = env[THIS]
        fmap = this_t.field_map()
        fmap[w.name] = t
        return {**env, THIS: this_t.with_fields(fmap)}

    def _missing(self, name, node):
        if self.scope is not None and name in self.scope.declared:
            _fail("consumed", f"variable {name} is not available here (consumed by an earlier read, "
                  "or declared in another scope)", node, "T-LinVar")
        _fail("unbound-variable", f"variable {name} is not declared", node, "T-UnVar")

    # -- expressions ---------------------------------------------------------

    def type_expr(self, env: Env, e):
        if isinstance(e, S.UnitLit):
            return VOID, env
        if isinstance(e, S.IntLit):
            return INT, env
        if isinstance(e, S.BoolLit):
            return BOOL, env
        if isinstance(e, S.NullLit):
            return NULL, env
        if isinstance(e, S.Var):
            if e.name not in env:
                self._missing(e.name, e)
            t = env[e.name]
            if is_lin_type(t):
                env = {k: v for k, v in env.items() if k != e.name}
            return t, env
        if isinstance(e, S.This):
            _fail("this-value", "this cannot be used as a value", e)
        if isinstance(e, S.FieldRef):
            return self._type_field_read(env, e)
        if isinstance(e, S.New):
            return self._type_new(env, e)
        if isinstance(e, S.Call):
            return self._type_call(env, e)
        if isinstance(e, S.BinOp):
            return self._type_binop(env, e)
        if isinstance(e, S.Not):
            t, env = self.type_expr(env, e.operand)
            if t != BOOL:
                _fail("type-mismatch", f"operand of ! has type {format_type(t)}", e, "T-Not")
            return BOOL, env
        return self.type_stmt(env, e)

    def _type_field_read(self, env, e):
        if not isinstance(e.obj, S.This):
            _fail("field-access", "fields are only accessible through this", e)
        this_t = self.this_type(env, e)
        cls = self.class_of(this_t.name, e)
        if cls.field_type(e.name) is None:
            _fail("unknown-field", f"{cls.name} has no field {e.name}", e)
        fmap = this_t.field_map()
        if e.name not in fmap:
            return NULL, env
        t = fmap[e.name]
        if is_lin_type(t):
            del fmap[e.name]
            env = {**env, THIS: this_t.with_fields(fmap)}
        return t, env

    def _type_new(self, env, e):
        cls = self.class_of(e.cls, e)
        rule = "T-UnNew" if cls.unrestricted else "T-New"
        t_arg, env2 = self.type_expr(env, e.arg)
        ctor = cls.constructor
        if ctor is None:
            _fail("no-constructor", f"class {cls.name} has no constructor", e, rule)
        ptype = self.resolve_sig(ctor.param_type, ctor)
        if not agree(t_arg, ptype):
            _fail("argument-mismatch",
                  f"constructor of {cls.name} expects {format_type(ptype)}, got {format_type(t_arg)}", e, rule)
        self._check_new_bindings(env, env2, e, rule)
        return ClassType(cls.name, cls.usage), env2

    def _check_new_bindings(self, before, after, node, rule):
        for r, t in after.items():
            if r not in before and is_lin_type(t):
                _fail("linear-residue", f"argument leaves linear binding {r}", node, rule)

    def _type_call(self, env, e):
        kind = e.kind or ("self" if isinstance(e.target, S.This) else
                          "field" if isinstance(e.target, S.FieldRef) else "variable")
        if kind == "self":
            return self._type_self_call(env, e)
        t_arg, env2 = self.type_expr(env, e.arg)
        recv = self.get_receiver(env2, e.target, e)
        if recv == NULL:
            _fail("null-receiver", f"call of {e.method} on an uninitialised reference", e, "T-Call")
        if not isinstance(recv, ClassType):
            _fail("not-an-object", f"call of {e.method} on a value of type {format_type(recv)}", e, "T-Call")
        cls = self.class_of(recv.name, e)
        nxt = allows(recv.usage, e.method)
        if nxt is UNDEFINED:
            _fail("protocol-violation",
                  f"usage {usage_str(recv.usage)} of {cls.name} does not allow {e.method}", e, "T-Call")
        method = cls.method(e.method)
        if method is None:
            _fail("unknown-method", f"{cls.name} has no method {e.method}", e, "T-Call")
        ptype = self.resolve_sig(method.param_type, method)
        if not agree(t_arg, ptype):
            _fail("argument-mismatch",
                  f"{cls.name}.{e.method} expects {format_type(ptype)}, got {format_type(t_arg)}", e, "T-Call")
        self._check_new_bindings(env, env2, e, "T-Call")
        env3 = self.set_receiver(env2, e.target, ClassType(recv.name, nxt))
        return self.resolve_sig(method.return_type, method), env3

    def _type_self_call(self, env, e):
        t_arg, env2 = self.type_expr(env, e.arg)
        this_t = self.this_type(env2, e)
        cls = self.class_of(this_t.name, e)
        method = cls.method(e.method)
        if method is None:
            _fail("unknown-method", f"{cls.name} has no method {e.method}", e, "T-SelfCall1")
        ptype = self.resolve_sig(method.param_type, method)
        if not agree(t_arg, ptype):
            _fail("argument-mismatch",
                  f"{cls.name}.{e.method} expects {format_type(ptype)}, got {format_type(t_arg)}", e, "T-SelfCall1")
        self._check_new_bindings(env, env2, e, "T-SelfCall1")
        key = (cls.name, method.name)
        if self.evaluated.get(key):
            return self.resolve_sig(method.return_type, method), env2
        self.evaluated[key] = True
        new_this, ret = self.type_body(cls, method, this_t, "T-SelfCall1")
        return ret, {**env2, THIS: new_this.with_usage(this_t.usage)}

    def _type_binop(self, env, e):
        rule = _OP_RULES[e.op]
        t1, env1 = self.type_expr(env, e.left)
        t2, env2 = self.type_expr(env1, e.right)
        if e.op in S.EQ_OPS:
            if not agree(t2, t1):
                _fail("type-mismatch", f"cannot compare {format_type(t1)} with {format_type(t2)}", e, rule)
            if is_lin_type(t1) and is_lin_type(t2):
                _fail("linear-compare", "comparing two linear objects consumes both", e, rule)
            return BOOL, env2
        want = BOOL if e.op in S.LOGIC_OPS else INT
        for side, t in (("left", t1), ("right", t2)):
            if t != want:
                _fail("type-mismatch", f"{side} operand of {e.op} has type {format_type(t)}, expected {want}", e, rule)
        return (INT if e.op in S.ARITH_OPS else BOOL), env2

    # -- statements ------------------------------------------------------------

    def type_stmt(self, env: Env, s):
        if isinstance(s, S.Seq):
            t1, env1 = self.type_stmt(env, s.first)
            if is_lin_type(t1):
                _fail("linear-discard", f"linear value of type {format_type(t1)} is discarded", s.first, "T-Seq")
            return self.type_stmt(env1, s.second)
        if isinstance(s, S.Decl):
            return self._type_decl(env, s)
        if isinstance(s, S.Assign):
            return self._type_assign(env, s)
        if isinstance(s, S.FieldAssign):
            return self._type_field_assign(env, s)
        if isinstance(s, S.If):
            return self._type_if(env, s)
        if isinstance(s, S.While):
            return self._type_while(env, s)
        if isinstance(s, S.Spawn):
            return self._type_spawn(env, s)
        if isinstance(s, (S.Frame, S.ObjRef)):
            _fail("runtime-form", "runtime-only construct in source", s)
        return self.type_expr(env, s)

    def _bind_type(self, declared, actual):
        if actual == NULL:
            return NULL
        if isinstance(actual, ClassType):
            return actual
        return declared

    def _type_decl(self, env, s):
        if s.name in env or s.name == THIS:
            _fail("redeclared", f"variable {s.name} is already declared", s, "T-NewVar")
        g = self.validate_decl_type(s.type, s)
        t, env2 = self.type_expr(env, s.value)
        if not agree(t, g):
            _fail("type-mismatch", f"cannot initialise {format_type(g)} {s.name} with {format_type(t)}", s, "T-NewVar")
        if self.scope is not None:
            self.scope.declared[s.name] = g
        return VOID, {**env2, s.name: self._bind_type(g, t)}

    def _type_assign(self, env, s):
        declared = self.scope.declared if self.scope is not None else {}
        if s.name not in declared and s.name not in env:
            _fail("unbound-variable", f"variable {s.name} is not declared", s, "T-AssignVar")
        g = declared.get(s.name, env.get(s.name))
        t, env2 = self.type_expr(env, s.value)
        if not agree(t, g):
            _fail("type-mismatch", f"cannot assign {format_type(t)} to {s.name} of type {format_type(g)}", s, "T-AssignVar")
        return VOID, {**env2, s.name: self._bind_type(g, t)}

    def _type_field_assign(self, env, s):
        if not isinstance(s.obj, S.This):
            _fail("field-access", "fields are only assignable through this", s)
        this0 = self.this_type(env, s)
        cls = self.class_of(this0.name, s)
        declared = cls.field_type(s.name)
        if declared is None:
            _fail("unknown-field", f"{cls.name} has no field {s.name}", s, "T-AssignField")
        g, env2 = self.type_expr(env, s.value)
        this_t = self.this_type(env2, s)
        fmap = this_t.field_map()
        if g == NULL:
            fmap.pop(s.name, None)
            return VOID, {**env2, THIS: this_t.with_fields(fmap)}
        if not agree(declared, g):
            _fail("type-mismatch", f"cannot assign {format_type(g)} to field {s.name} of type {format_type(declared)}",
                  s, "T-AssignField")
        if s.name in fmap and not types_equal(fmap[s.name], g):
            _fail("field-overwrite",
                  f"field {s.name} holds {format_type(fmap[s.name])}; cannot overwrite with {format_type(g)}",
                  s, "T-AssignField")
        fmap[s.name] = self._bind_type(declared, g)
        return VOID, {**env2, THIS: this_t.with_fields(fmap)}

    @staticmethod
    def _call_condition(cond):
        negated = False
        if isinstance(cond, S.Not):
            negated, cond = True, cond.operand
        if isinstance(cond, S.Call) and not isinstance(cond.target, S.This):
            return cond, negated
        return None, False

    def _join_types(self, t1, t2, node):
        if types_equal(t1, t2):
            return t1
        if agree(t1, t2):
            return t2 if t1 == NULL else t1
        _fail("branch-type", f"branches have types {format_type(t1)} and {format_type(t2)}", node, "T-If")

    def _type_if(self, env, s):
        call, negated = self._call_condition(s.cond)
        if call is not None:
            rule = "T-IfNotCall" if negated else "T-IfCall"
            tc, env1 = self.type_expr(env, call)
            if tc != BOOL:
                _fail("type-mismatch", f"condition has type {format_type(tc)}", s.cond, rule)
            recv = self.get_receiver(env1, call.target, call)
            if isinstance(recv, ClassType) and isinstance(head(recv.usage), Variant):
                v = head(recv.usage)
                ut, uf = (v.right, v.left) if negated else (v.left, v.right)
                env_t = self.set_receiver(env1, call.target, ClassType(recv.name, ut))
                env_f = self.set_receiver(env1, call.target, ClassType(recv.name, uf))
            else:
                rule = "T-IfUnCall"
                env_t = env_f = env1
        else:
            rule = "T-If"
            tc, env1 = self.type_expr(env, s.cond)
            if tc != BOOL:
                _fail("type-mismatch", f"condition has type {format_type(tc)}", s.cond, rule)
            if not env_equal(env, env1):
                _fail("condition-effect", "a plain condition must not change the environment", s.cond, rule)
            env_t = env_f = env1
        t1, g1 = self.type_stmt(env_t, s.then)
        t2, g2 = self.type_stmt(env_f, s.orelse)
        return self._join_types(t1, t2, s), merge_branch_envs(g1, g2, base=env1, node=s)

    def _loop_check(self, pre, post, node, rule, skip=()):
        for r, t in pre.items():
            if r in skip:
                continue
            if r not in post or not types_equal(t, post[r]):
                have = format_type(post[r]) if r in post else "nothing"
                _fail("loop-invariant", f"loop body changes {r} from {format_type(t)} to {have}", node, rule)
        out = dict(post)
        for r, t in post.items():
            if r not in pre:
                if is_lin_type(t):
                    _fail("loop-invariant", f"loop body leaves linear {r} behind", node, rule)
                del out[r]
        return out

    def _type_while(self, env, s):
        call, negated = self._call_condition(s.cond)
        if call is not None:
            rule = "T-WhileNotCall" if negated else "T-WhileCall"
            tc, env1 = self.type_expr(env, call)
            if tc != BOOL:
                _fail("type-mismatch", f"condition has type {format_type(tc)}", s.cond, rule)
            recv = self.get_receiver(env1, call.target, call)
            if isinstance(recv, ClassType) and isinstance(head(recv.usage), Variant):
                v = head(recv.usage)
                ubody, uexit = (v.right, v.left) if negated else (v.left, v.right)
                _, post = self.type_stmt(self.set_receiver(env1, call.target, ClassType(recv.name, ubody)), s.body)
                before = self.get_receiver(env, call.target, call)
                after = self.get_receiver(post, call.target, call)
                if not types_equal(before, after):
                    _fail("loop-invariant",
                          f"after the loop body {format_type(after)} differs from {format_type(before)} before the condition",
                          s, rule)
                post = self._loop_check(env, post, s, rule)
                return VOID, self.set_receiver(post, call.target, ClassType(recv.name, uexit))
            rule = "T-WhileUnCall"
            _, post = self.type_stmt(env1, s.body)
            self._loop_check(env, post, s, rule)
            return VOID, env1
        rule = "T-While"
        tc, env1 = self.type_expr(env, s.cond)
        if tc != BOOL:
            _fail("type-mismatch", f"condition has type {format_type(tc)}", s.cond, rule)
        if not env_equal(env, env1):
            _fail("condition-effect", "a plain condition must not change the environment", s.cond, rule)
        _, post = self.type_stmt(env, s.body)
        return VOID, self._loop_check(env, post, s, rule)

    def _type_spawn(self, env, s):
        _, post = self.type_stmt(env, s.body)
        flat = _flat(post)
        for r in sorted(modified(env, post)):
            t = flat[r]
            if is_lin_type(t):
                _fail("spawn-linear", f"{r} is left linear ({format_type(t)}) by the spawned thread", s, "T-Spawn")
            if not _completed_type(t):
                _fail("spawn-incomplete", f"usage of {r} is not completed inside spawn ({format_type(t)})", s, "T-Spawn")
        return VOID, {r: t for r, t in post.items() if r in env}

    # -- usages ----------------------------------------------------------------

    def traverse_usage(self, theta: dict, this_t: ClassType, u) -> list[ClassType]:
        """Walk ``u`` from receiver type ``this_t``; returns the receiver types
        at every point where the protocol ends."""
        cls = self.class_of(this_t.name)
        if isinstance(u, Eps):
            return [this_t]
        if isinstance(u, Branch):
            if not u.branches:
                return [this_t.with_usage(u)]
            leaves = []
            for m, cont in u.branches:
                method = cls.method(m)
                if method is None:
                    _fail("unknown-method", f"usage of {cls.name} names undeclared method {m}", cls, "T-Branch")
                new_this, _ = self.type_body(cls, method, this_t.with_usage(u), "T-Branch")
                leaves.extend(self.traverse_usage(theta, new_this.with_usage(cont), cont))
            return leaves
        if isinstance(u, Variant):
            return (self.traverse_usage(theta, this_t.with_usage(u.left), u.left)
                    + self.traverse_usage(theta, this_t.with_usage(u.right), u.right))
        if isinstance(u, Rec):
            return self.traverse_usage({**theta, u.var: this_t}, this_t, u.body)
        if isinstance(u, UVar):
            if u.name not in theta:
                _fail("undefined-usage", f"usage variable {u.name} is unbound", cls, "T-UsageVar")
            expected = theta[u.name]
            f1, f2 = expected.field_map(), this_t.field_map()
            if f1.keys() != f2.keys() or not all(types_equal(f1[k], f2[k]) for k in f1):
                _fail("usage-var-mismatch",
                      f"fields of {cls.name} at {u.name} differ from those when {u.name} was entered", cls, "T-UsageVar")
            return []
        raise TypeError(u)

    def check_fields_unrestricted(self, this_t: ClassType, rule):
        for f, t in this_t.field_map().items():
            if is_lin_type(t):
                cls = self.class_of(this_t.name)
                _fail("linear-field",
                      f"field {f} of {cls.name} is still linear ({format_type(t)}) when the protocol ends", cls, rule)

    def check_class(self, cls: S.ClassDecl):
        for fd in cls.fields:
            self.validate_decl_type(fd.type, fd)
        if cls.unrestricted:
            for m in cls.methods:
                new_this, _ = self.type_body(cls, m, ClassType(cls.name, EPS, ()), "T-UnClass")
                self.check_fields_unrestricted(new_this, "T-UnClass")
            return
        u = cls.effective_usage if cls.effective_usage is not None else Branch("lin", ((cls.name, cls.usage),))
        if free_vars(u):
            _fail("undefined-usage", f"usage of {cls.name} has unbound names", cls, "T-Class")
        if not check_usage({}, u):
            _fail("usage-check",
                  f"usage of {cls.name} moves from an unrestricted state to a linear or different state: {usage_str(u)}",
                  cls, "T-Class/check")
        for leaf in self.traverse_usage({}, ClassType(cls.name, u, ()), u):
            self.check_fields_unrestricted(leaf, "T-Class")


def check_program(program: S.Program) -> list[Diagnostic]:
    """All diagnostics for an elaborated program; empty means accepted."""
    diags = []
    if program.cls(program.entry) is None:
        diags.append(Diagnostic("no-entry-class", f"no entry class {program.entry}", None, "entry"))
    checker = Checker(program)
    for cls in program.classes:
        try:
            checker.check_class(cls)
        except CheckError as exc:
            diags.append(exc.diagnostic)
    return diags


def traverse_usage(program: S.Program, theta: dict, this_t: ClassType, u) -> list[ClassType]:
    return Checker(program).traverse_usage(theta, this_t, u)
