"""Exhaustive interleaving exploration and DOT output."""
from __future__ import annotations

import dataclasses
import hashlib
from collections import deque
from dataclasses import dataclass, field

from . import syntax as S
from .interp import MachineState, Thread, try_step

_NODE_TYPES = tuple(t for t in S.Node.__args__)


def _map_oids(node, ren: dict):
    if isinstance(node, S.ObjRef):
        return S.ObjRef(ren[node.oid])
    if not isinstance(node, _NODE_TYPES):
        return node
    changes = {}
    for f in dataclasses.fields(node):
        v = getattr(node, f.name)
        if f.name == "oid":
            changes["oid"] = ren[v]
        elif isinstance(v, _NODE_TYPES):
            nv = _map_oids(v, ren)
            if nv is not v:
                changes[f.name] = nv
    return dataclasses.replace(node, **changes) if changes else node


def _oids_in(node):
    for n in S.walk(node):
        if isinstance(n, S.ObjRef):
            yield n.oid
        elif isinstance(n, S.Frame):
            yield n.oid


def canonicalize(state: MachineState) -> MachineState:
    """Rename object ids into first-use order: threads in order (term, then
    store by name), then objects reachable from fields, then the rest."""
    order: list[int] = []
    seen = set()

    def see(oid):
        if oid not in seen:
            seen.add(oid)
            order.append(oid)

    for th in state.threads:
        for oid in _oids_in(th.term):
            see(oid)
        for _, v in th.store:
            for oid in _oids_in(v):
                see(oid)
    heap = dict(state.heap)
    i = 0
    while i < len(order):
        rec = heap.get(order[i])
        i += 1
        if rec is not None:
            for _, v in rec.fields:
                for oid in _oids_in(v):
                    see(oid)
    for oid in sorted(heap):
        see(oid)
    ren = {old: new for new, old in enumerate(order)}
    new_heap = tuple(sorted(
        (ren[oid], dataclasses.replace(rec, fields=tuple((f, _map_oids(v, ren)) for f, v in rec.fields)))
        for oid, rec in heap.items()
    ))
    threads = tuple(
        Thread(_map_oids(th.term, ren), tuple((n, _map_oids(v, ren)) for n, v in th.store), th.counter)
        for th in state.threads
    )
    return MachineState(new_heap, threads, max(state.next_oid, len(order)))


def state_key(state: MachineState) -> str:
    """Canonical text of a state; the fresh-id counter is not part of it."""
    c = canonicalize(state)
    return repr((c.heap, c.threads))


def digest(key: str) -> str:
    return hashlib.sha256(key.encode()).hexdigest()[:12]


@dataclass
class ReductionGraph:
    nodes: list = field(default_factory=list)  # canonical MachineStates, index = node id
    keys: list = field(default_factory=list)
    edges: list = field(default_factory=list)  # (src, rule, thread, dst)
    stuck: dict = field(default_factory=dict)  # node id -> reason
    initial: int = 0
    truncated: bool = False

    def successors(self, n):
        return [e for e in self.edges if e[0] == n]

    def terminal_nodes(self):
        return [i for i, s in enumerate(self.nodes) if s.terminated]


def explore(program: S.Program, state: MachineState, max_states: int = 10_000) -> ReductionGraph:
    """Breadth-first closure over every thread choice."""
    g = ReductionGraph()
    index: dict[str, int] = {}

    def add(s):
        c = canonicalize(s)
        key = repr((c.heap, c.threads))
        if key in index:
            return index[key], False
        index[key] = len(g.nodes)
        g.nodes.append(c)
        g.keys.append(key)
        return index[key], True

    start, _ = add(state)
    g.initial = start
    queue = deque([start])
    while queue:
        n = queue.popleft()
        s = g.nodes[n]
        progressed = False
        pending = False
        for i in range(len(s.threads)):
            r = try_step(program, s, i)
            if r.status == "done":
                continue
            pending = True
            if r.status == "stuck":
                g.stuck.setdefault(n, r.reason)
                continue
            if r.status == "blocked":
                continue
            progressed = True
            if len(g.nodes) >= max_states and canonical_key(r.state) not in index:
                g.truncated = True
                continue
            m, fresh = add(r.state)
            g.edges.append((n, r.rule, i, m))
            if fresh:
                queue.append(m)
        if pending and not progressed and n not in g.stuck:
            g.stuck[n] = "deadlock"
    return g


def canonical_key(state: MachineState) -> str:
    return state_key(state)


def to_dot(g: ReductionGraph) -> str:
    lines = ["digraph reduction {"]
    for n, key in enumerate(g.keys):
        attrs = [f'label="{digest(key)}"']
        if n in g.stuck:
            attrs.append("shape=box")
            attrs.append('color="red"')
            attrs.append(f'tooltip="{g.stuck[n]}"')
        elif g.nodes[n].terminated:
            attrs.append("shape=doublecircle")
        lines.append(f"  n{n} [{', '.join(attrs)}];")
    for src, rule, thread, dst in g.edges:
        lines.append(f'  n{src} -> n{dst} [label="{rule}@{thread}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
