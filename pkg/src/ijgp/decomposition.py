"""Elimination orderings, mini-bucket join-graph structuring and join-graph audits."""

from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

from .network import BeliefNetwork, MoralGraph, moral_graph


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    theta: frozenset
    kind: str = "out"  # "in" chains mini-buckets of one bucket, "out" carries a message scope

    def other(self, node: int) -> int:
        return self.v if node == self.u else self.u


@dataclass(frozen=True, eq=False)
class JoinGraph:
    """Arc-labeled join-graph: clusters ``chi``, CPT placement ``psi``, labeled edges.

    Edges are stored with ``u < v`` and sorted by ``(u, v)``; that order is the
    canonical edge order used by :func:`minimize_arc_labels`.
    """

    chi: tuple
    psi: tuple
    edges: tuple

    @classmethod
    def build(cls, chi: Iterable[Iterable[int]], psi: Iterable[Iterable[int]], edges: Iterable[Edge]) -> "JoinGraph":
        norm = []
        for e in edges:
            u, v = (e.u, e.v) if e.u <= e.v else (e.v, e.u)
            norm.append(Edge(u, v, frozenset(e.theta), e.kind))
        norm.sort(key=lambda e: (e.u, e.v))
        return cls(
            tuple(frozenset(c) for c in chi),
            tuple(tuple(sorted(p)) for p in psi),
            tuple(norm),
        )

    @property
    def n_nodes(self) -> int:
        return len(self.chi)

    @cached_property
    def incidence(self) -> tuple:
        """Per node, the list of ``(neighbor, edge_index)`` pairs in edge order."""
        inc = [[] for _ in self.chi]
        for k, e in enumerate(self.edges):
            inc[e.u].append((e.v, k))
            inc[e.v].append((e.u, k))
        return tuple(tuple(x) for x in inc)

    @cached_property
    def edge_index(self) -> dict:
        return {(e.u, e.v): k for k, e in enumerate(self.edges)}

    def find_edge(self, u: int, v: int) -> int:
        return self.edge_index[(u, v) if u <= v else (v, u)]

    def with_labels(self, thetas: Sequence[Iterable[int]]) -> "JoinGraph":
        edges = tuple(Edge(e.u, e.v, frozenset(t), e.kind) for e, t in zip(self.edges, thetas))
        return JoinGraph(self.chi, self.psi, edges)

    def cpt_home(self) -> dict[int, int]:
        return {c: u for u, cs in enumerate(self.psi) for c in cs}

    def dump(self) -> str:
        lines = []
        for u, (c, p) in enumerate(zip(self.chi, self.psi)):
            lines.append(f"node {u} chi: {' '.join(map(str, sorted(c)))} psi: {' '.join(map(str, p))}")
        for e in self.edges:
            lines.append(f"edge {e.u} {e.v} theta: {' '.join(map(str, sorted(e.theta)))} {e.kind}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class DecompositionStats:
    cluster_count: int
    max_cluster_size: int
    max_label_size: int
    max_degree: int
    separator_width: int

    @property
    def induced_width(self) -> int:
        return self.max_cluster_size - 1


@dataclass
class MiniBucket:
    id: int
    var: int
    scope: frozenset
    cpts: list = field(default_factory=list)
    messages: list = field(default_factory=list)  # ids of mini-buckets feeding this one
    target: int | None = None  # mini-bucket that consumes this one's message
    message_scope: frozenset = frozenset()


@dataclass
class SchematicBucketTrace:
    order: tuple
    i_bound: int | None
    buckets: dict  # variable -> mini-bucket ids in creation order
    minibuckets: list

    def arcs(self) -> list[tuple[int, int]]:
        return [(mb.id, mb.target) for mb in self.minibuckets if mb.target is not None]


# --- orderings ---------------------------------------------------------------


def _fill_count(adj: dict, v: int) -> int:
    nbrs = adj[v]
    missing = 0
    for a in nbrs:
        missing += len(nbrs) - 1 - len(adj[a] & nbrs)
    return missing // 2


def min_fill_ordering(g: MoralGraph, seed: int | None = None) -> list[int]:
    """Greedy min-fill ordering; position 0 is eliminated last.

    Ties go to the lowest vertex index, or are broken uniformly at random when
    ``seed`` is given.
    """
    adj = {v: set(nb) for v, nb in g.items()}
    rng = random.Random(seed) if seed is not None else None
    fill = {v: _fill_count(adj, v) for v in adj}
    sequence = []
    while adj:
        best = min(fill.values())
        ties = sorted(v for v, f in fill.items() if f == best)
        v = ties[0] if rng is None else rng.choice(ties)
        nbrs = adj.pop(v)
        del fill[v]
        added = []
        for a in nbrs:
            adj[a].discard(v)
            added.extend((a, b) for b in nbrs if a < b and b not in adj[a])
        for a, b in added:
            adj[a].add(b)
            adj[b].add(a)
        # outside the eliminated neighborhood only the new edges change the fill
        for a, b in added:
            for w in adj[a] & adj[b]:
                if w not in nbrs:
                    fill[w] -= 1
        for a in nbrs:
            fill[a] = _fill_count(adj, a)
        sequence.append(v)
    return sequence[::-1]


def induced_width(g: MoralGraph, order: Sequence[int]) -> int:
    if sorted(order) != sorted(g):
        raise ValueError("order must be a permutation of the graph's vertices")
    adj = {v: set(nb) for v, nb in g.items()}
    width = 0
    for v in reversed(order):
        nbrs = adj.pop(v)
        width = max(width, len(nbrs))
        for a in nbrs:
            adj[a].discard(v)
            adj[a] |= nbrs - {a}
    return width


def network_ordering(net: BeliefNetwork, seed: int | None = None) -> list[int]:
    return min_fill_ordering(moral_graph(net), seed)


# --- mini-bucket structuring -------------------------------------------------


def schematic_mini_bucket(net: BeliefNetwork, order: Sequence[int], i_bound: int | None) -> SchematicBucketTrace:
    """Scope-only mini-bucket trace along ``order`` (``None`` means no bound)."""
    if i_bound is not None and i_bound < 1:
        raise ValueError("i-bound must be at least 1")
    order = tuple(order)
    if sorted(order) != list(range(net.n)):
        raise ValueError("order must be a permutation of the network's variables")
    pos = {v: k for k, v in enumerate(order)}
    # bucket entries: (scope, cpt id or None, source mini-bucket id or None)
    pending: dict[int, list] = {v: [] for v in order}
    for v, f in enumerate(net.cpts):
        scope = frozenset(f.vars)
        pending[max(scope, key=pos.__getitem__)].append((scope, v, None))

    minibuckets: list[MiniBucket] = []
    buckets: dict[int, list[int]] = {}
    for var in reversed(order):
        funcs = sorted(pending.pop(var), key=lambda t: -len(t[0]))
        groups: list[MiniBucket] = []
        for scope, cpt, source in funcs:
            home = None
            for mb in groups:
                if i_bound is None or len(mb.scope | scope) <= i_bound:
                    home = mb
                    break
            if home is None:
                home = MiniBucket(id=-1, var=var, scope=frozenset())
                groups.append(home)
            home.scope = home.scope | scope
            if cpt is not None:
                home.cpts.append(cpt)
            else:
                home.messages.append(source)
        buckets[var] = []
        for mb in groups:
            mb.id = len(minibuckets)
            minibuckets.append(mb)
            buckets[var].append(mb.id)
            for src in mb.messages:
                minibuckets[src].target = mb.id
            mb.message_scope = mb.scope - {var}
            if mb.message_scope:
                dest = max(mb.message_scope, key=pos.__getitem__)
                pending[dest].append((mb.message_scope, None, mb.id))
    return SchematicBucketTrace(order, i_bound, buckets, minibuckets)


def join_graph_structuring(net: BeliefNetwork, order: Sequence[int], i_bound: int | None) -> JoinGraph:
    trace = schematic_mini_bucket(net, order, i_bound)
    mbs = trace.minibuckets
    edges = []
    for mb in mbs:
        if mb.target is not None:
            edges.append(Edge(mb.id, mb.target, mb.scope & mbs[mb.target].scope, "out"))
    for var, ids in trace.buckets.items():
        for a, b in zip(ids, ids[1:]):
            edges.append(Edge(a, b, frozenset({var}), "in"))
    return JoinGraph.build([mb.scope for mb in mbs], [mb.cpts for mb in mbs], edges)


def build_join_tree(net: BeliefNetwork, order: Sequence[int]) -> JoinGraph:
    return join_graph_structuring(net, order, None)


def dual_join_graph(net: BeliefNetwork) -> JoinGraph:
    """One cluster per CPT, minimally labeled so each variable forms a star at its own CPT."""
    chi = [frozenset(f.vars) for f in net.cpts]
    edges = []
    for u, v in itertools.combinations(range(net.n), 2):
        shared = chi[u] & chi[v]
        if shared:
            edges.append(Edge(u, v, shared, "out"))
    full = JoinGraph.build(chi, [(v,) for v in range(net.n)], edges)
    # cluster x holds the CPT of x; drop x from edges away from that cluster first
    jg = minimize_arc_labels(full, key=lambda k, x: (x in (full.edges[k].u, full.edges[k].v), k, x))
    return JoinGraph.build(jg.chi, jg.psi, [e for e in jg.edges if e.theta])


# --- audits ------------------------------------------------------------------


def _labeled_components(jg: JoinGraph, var: int, skip: int | None = None) -> list[set[int]]:
    nodes = [u for u, c in enumerate(jg.chi) if var in c]
    adj = {u: [] for u in nodes}
    for k, e in enumerate(jg.edges):
        if k != skip and var in e.theta and e.u in adj and e.v in adj:
            adj[e.u].append(e.v)
            adj[e.v].append(e.u)
    seen: set[int] = set()
    comps = []
    for start in nodes:
        if start in seen:
            continue
        comp = {start}
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for y in adj[x]:
                if y not in comp:
                    comp.add(y)
                    queue.append(y)
        seen |= comp
        comps.append(comp)
    return comps


def _all_vars(jg: JoinGraph) -> list[int]:
    return sorted(set().union(*jg.chi)) if jg.chi else []


def validate_decomposition(net: BeliefNetwork, jg: JoinGraph) -> list[str]:
    problems = []
    homes: dict[int, list[int]] = {}
    for u, cpts in enumerate(jg.psi):
        for c in cpts:
            homes.setdefault(c, []).append(u)
    for c in range(net.n):
        where = homes.get(c, [])
        if len(where) != 1:
            problems.append(f"CPT {c} is placed in {len(where)} clusters {where}")
        elif not set(net.cpts[c].vars) <= jg.chi[where[0]]:
            problems.append(f"CPT {c} scope is not covered by cluster {where[0]}")
    unknown = sorted(set(homes) - set(range(net.n)))
    if unknown:
        problems.append(f"clusters reference unknown CPTs {unknown}")
    seen_pairs = set()
    for e in jg.edges:
        if not (0 <= e.u < jg.n_nodes and 0 <= e.v < jg.n_nodes) or e.u == e.v:
            problems.append(f"edge ({e.u},{e.v}) has invalid endpoints")
            continue
        if (e.u, e.v) in seen_pairs:
            problems.append(f"duplicate edge ({e.u},{e.v})")
        seen_pairs.add((e.u, e.v))
        if not e.theta <= jg.chi[e.u] & jg.chi[e.v]:
            problems.append(f"label of edge ({e.u},{e.v}) is not inside the separator")
    for var in _all_vars(jg):
        comps = _labeled_components(jg, var)
        if len(comps) > 1:
            problems.append(
                f"variable {var}: clusters split into {len(comps)} parts by labels: "
                + " | ".join(str(sorted(c)) for c in comps)
            )
    return problems


def variable_cycles(jg: JoinGraph) -> list[int]:
    """Variables whose labeled edges contain a cycle."""
    found = []
    for var in _all_vars(jg):
        n_edges = sum(1 for e in jg.edges if var in e.theta)
        comps = _labeled_components(jg, var)
        n_nodes = sum(len(c) for c in comps)
        if n_edges > n_nodes - len(comps):
            found.append(var)
    return found


def is_label_minimal(jg: JoinGraph) -> bool:
    """No variable can leave any label without breaking arc-connectedness."""
    return not variable_cycles(jg)


def minimize_arc_labels(jg: JoinGraph, key: Callable[[int, int], object] | None = None) -> JoinGraph:
    """Greedily drop label variables while arc-connectedness holds.

    Candidates ``(edge_index, var)`` are tried in canonical order (edge order,
    then ascending variable) unless ``key`` reorders them.
    """
    thetas = [set(e.theta) for e in jg.edges]
    pairs = [(k, x) for k, e in enumerate(jg.edges) for x in sorted(e.theta)]
    if key is not None:
        pairs.sort(key=lambda p: key(*p))
    # per variable, the current labeled adjacency
    adj: dict[int, dict[int, set[int]]] = {}
    for k, e in enumerate(jg.edges):
        for x in e.theta:
            a = adj.setdefault(x, {})
            a.setdefault(e.u, set()).add(k)
            a.setdefault(e.v, set()).add(k)

    def still_connected(x: int, k: int) -> bool:
        e = jg.edges[k]
        a = adj[x]
        seen = {e.u}
        queue = deque([e.u])
        while queue:
            node = queue.popleft()
            for kk in a.get(node, ()):
                if kk == k:
                    continue
                nxt = jg.edges[kk].other(node)
                if nxt == e.v:
                    return True
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return False

    for k, x in pairs:
        if still_connected(x, k):
            thetas[k].discard(x)
            e = jg.edges[k]
            adj[x][e.u].discard(k)
            adj[x][e.v].discard(k)
    return jg.with_labels(thetas)


def _edge_ids(jg: JoinGraph, edges: Iterable) -> set[int]:
    out = set()
    for e in edges:
        if isinstance(e, Edge):
            out.add(jg.find_edge(e.u, e.v))
        elif isinstance(e, tuple):
            out.add(jg.find_edge(*e))
        else:
            out.add(int(e))
    return out


def arc_separates(jg: JoinGraph, nodes_w: Iterable[int], nodes_y: Iterable[int], cut: Iterable) -> bool:
    """True iff no path joins ``nodes_w`` to ``nodes_y`` once the ``cut`` edges are removed.

    ``cut`` may hold edge indices, ``(u, v)`` pairs or :class:`Edge` objects.
    """
    nodes_w, nodes_y = set(nodes_w), set(nodes_y)
    removed = _edge_ids(jg, cut)
    if nodes_w & nodes_y:
        return False
    seen = set(nodes_w)
    queue = deque(nodes_w)
    while queue:
        node = queue.popleft()
        for nxt, k in jg.incidence[node]:
            if k in removed or nxt in seen:
                continue
            if nxt in nodes_y:
                return False
            seen.add(nxt)
            queue.append(nxt)
    return True


def decomposition_stats(jg: JoinGraph) -> DecompositionStats:
    return DecompositionStats(
        cluster_count=jg.n_nodes,
        max_cluster_size=max((len(c) for c in jg.chi), default=0),
        max_label_size=max((len(e.theta) for e in jg.edges), default=0),
        max_degree=max((len(x) for x in jg.incidence), default=0),
        separator_width=max((len(jg.chi[e.u] & jg.chi[e.v]) for e in jg.edges), default=0),
    )


def is_forest(jg: JoinGraph) -> bool:
    parent = list(range(jg.n_nodes))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in jg.edges:
        a, b = find(e.u), find(e.v)
        if a == b:
            return False
        parent[a] = b
    return True
