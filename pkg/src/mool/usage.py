"""Usage protocols and the operations over them.

A usage is a regular term describing which methods an object accepts next:

    Eps                         no protocol (unrestricted class)
    Branch("lin" | "un", ...)   a state offering ``m: continuation`` pairs
    Variant(left, right)        post-state of a boolean method: left if true
    Rec(X, body)                recursion binder
    UVar(X)                     recursion variable

``end`` in source text is ``Branch("un", ())``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Union


class UsageError(Exception):
    """Raised for ill-formed usages (free variables, bare variables)."""


@dataclass(frozen=True)
class Eps:
    pass


@dataclass(frozen=True)
class Branch:
    qual: str
    branches: tuple[tuple[str, "Usage"], ...] = ()

    def __post_init__(self):
        if self.qual not in ("lin", "un"):
            raise UsageError(f"bad qualifier {self.qual!r}")
        names = [m for m, _ in self.branches]
        if len(set(names)) != len(names):
            raise UsageError(f"duplicate method in usage state: {names}")

    @property
    def methods(self) -> frozenset[str]:
        return frozenset(m for m, _ in self.branches)

    def get(self, method: str):
        for m, cont in self.branches:
            if m == method:
                return cont
        return None


@dataclass(frozen=True)
class Variant:
    left: "Usage"
    right: "Usage"


@dataclass(frozen=True)
class Rec:
    var: str
    body: "Usage"


@dataclass(frozen=True)
class UVar:
    name: str


Usage = Union[Eps, Branch, Variant, Rec, UVar]

EPS = Eps()
END = Branch("un", ())


class _Undefined:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNDEFINED"

    def __bool__(self):
        return False


#: Result of :func:`allows` when the method is not available.
UNDEFINED = _Undefined()


def lin(*branches: tuple[str, Usage]) -> Branch:
    return Branch("lin", tuple(branches))


def un(*branches: tuple[str, Usage]) -> Branch:
    return Branch("un", tuple(branches))


def free_vars(u: Usage) -> frozenset[str]:
    if isinstance(u, UVar):
        return frozenset([u.name])
    if isinstance(u, Branch):
        return frozenset().union(*(free_vars(c) for _, c in u.branches))
    if isinstance(u, Variant):
        return free_vars(u.left) | free_vars(u.right)
    if isinstance(u, Rec):
        return free_vars(u.body) - {u.var}
    return frozenset()


_fresh = itertools.count()


def substitute(u: Usage, name: str, replacement: Usage) -> Usage:
    """Capture-avoiding ``u[replacement/name]``."""
    if isinstance(u, UVar):
        return replacement if u.name == name else u
    if isinstance(u, Branch):
        return Branch(u.qual, tuple((m, substitute(c, name, replacement)) for m, c in u.branches))
    if isinstance(u, Variant):
        return Variant(substitute(u.left, name, replacement), substitute(u.right, name, replacement))
    if isinstance(u, Rec):
        if u.var == name:
            return u
        if u.var in free_vars(replacement):
            fresh = f"{u.var}'{next(_fresh)}"
            body = substitute(u.body, u.var, UVar(fresh))
            return Rec(fresh, substitute(body, name, replacement))
        return Rec(u.var, substitute(u.body, name, replacement))
    return u


def _unfold(u: Usage) -> Usage:
    if isinstance(u, Rec):
        return substitute(u.body, u.var, u)
    return u


def unfold(u: Usage) -> Usage:
    """Unroll one level of recursion: ``rec X.b`` becomes ``b[rec X.b / X]``."""
    fv = free_vars(u)
    if fv:
        raise UsageError(f"usage has unbound variable(s): {', '.join(sorted(fv))}")
    return _unfold(u)


def head(u: Usage) -> Usage:
    """Unfold until the outermost constructor is not a binder."""
    seen = 0
    while isinstance(u, Rec):
        u = _unfold(u)
        seen += 1
        if seen > 64:
            raise UsageError("non-contractive recursive usage")
    return u


def allows(u: Usage, method: str):
    """Continuation after calling ``method`` in state ``u``.

    Returns ``EPS`` for unrestricted classes and :data:`UNDEFINED` when the
    method is not offered (variants must be resolved first).
    """
    if isinstance(u, Eps):
        return EPS
    if isinstance(u, Rec):
        return allows(head(u), method)
    if isinstance(u, Branch):
        cont = u.get(method)
        return UNDEFINED if cont is None else cont
    return UNDEFINED


def qualifier(u: Usage) -> str:
    """One of ``"lin"``, ``"un"``, ``"variant"`` or ``"eps"``."""
    if isinstance(u, UVar):
        raise UsageError(f"cannot classify bare usage variable {u.name}")
    h = head(u)
    if isinstance(h, Eps):
        return "eps"
    if isinstance(h, Variant):
        return "variant"
    if isinstance(h, Branch):
        return h.qual
    raise UsageError(f"cannot classify bare usage variable {h.name}")


def is_linear(u: Usage) -> bool:
    return qualifier(u) in ("lin", "variant")


def action_set(u: Usage) -> frozenset[str]:
    h = head(u)
    if not isinstance(h, Branch):
        raise UsageError("action set is only defined for branch states")
    return h.methods


# -- well-formedness ---------------------------------------------------------

def _target_head(phi: Mapping[str, Usage], z: Usage):
    """The state a continuation leads to, looking variables up in ``phi``."""
    hops = 0
    while True:
        if isinstance(z, UVar):
            if z.name not in phi:
                return None
            z = phi[z.name]
        elif isinstance(z, Rec):
            z = z.body
        else:
            return z
        hops += 1
        if hops > 64:
            return None


def check_usage(phi: Mapping[str, Usage], u: Usage) -> bool:
    """True iff no unrestricted state can move to a state that is linear, a
    variant, or an unrestricted state offering a different set of methods."""
    return _check(dict(phi), u)


def _check(phi: dict, u: Usage) -> bool:
    if isinstance(u, (Eps, UVar)):
        return True
    if isinstance(u, Variant):
        return _check(phi, u.left) and _check(phi, u.right)
    if isinstance(u, Rec):
        return _check({**phi, u.var: u.body}, u.body)
    if u.qual == "lin":
        return all(_check(phi, c) for _, c in u.branches)
    actions = u.methods
    for _, cont in u.branches:
        target = _target_head(phi, cont)
        if not isinstance(target, Branch) or target.qual != "un" or target.methods != actions:
            return False
        if not isinstance(cont, UVar) and not _check(phi, cont):
            return False
    return True


# -- equivalence and subtyping ----------------------------------------------

def usages_equivalent(u1: Usage, u2: Usage) -> bool:
    """Bisimilarity up to unfolding (and hence up to renaming of binders)."""
    if u1 == u2:
        return True
    visited: set[tuple[Usage, Usage]] = set()
    todo = [(u1, u2)]
    while todo:
        pair = todo.pop()
        if pair in visited or pair[0] == pair[1]:
            continue
        visited.add(pair)
        a, b = head(pair[0]), head(pair[1])
        if isinstance(a, Eps) and isinstance(b, Eps):
            continue
        if isinstance(a, UVar) and isinstance(b, UVar):
            if a.name != b.name:
                return False
            continue
        if isinstance(a, Branch) and isinstance(b, Branch):
            if a.qual != b.qual or a.methods != b.methods:
                return False
            todo.extend((c, b.get(m)) for m, c in a.branches)
            continue
        if isinstance(a, Variant) and isinstance(b, Variant):
            todo.append((a.left, b.left))
            todo.append((a.right, b.right))
            continue
        return False
    return True


def usage_subtype(u1: Usage, u2: Usage) -> bool:
    if usages_equivalent(u1, u2):
        return True
    a, b = head(u1), head(u2)
    if isinstance(a, Variant) and isinstance(b, Variant):
        return usage_subtype(a.left, b.left) and usage_subtype(a.right, b.right)
    return False
