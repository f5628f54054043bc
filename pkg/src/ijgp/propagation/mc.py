"""Mini-clustering: one collect/distribute pass over a join-tree with partitioned messages."""

from __future__ import annotations

import time
from typing import Mapping, Sequence

import numpy as np

from ..decomposition import JoinGraph, build_join_tree, network_ordering
from ..errors import InconsistentEvidenceError, WidthGuardError
from ..factor import Factor, normalize, sum_product
from ..network import BeliefNetwork
from .engine import DEFAULT_TABLE_LIMIT, BeliefResult, _belief_clusters, _reduce_network
from .schedule import iteration_schedule


def partition_functions(funcs: Sequence[Factor], i_bound: int | None) -> list[list[Factor]]:
    """First-fit over functions sorted by decreasing scope size, at most ``i_bound`` variables each."""
    groups: list[tuple[set, list]] = []
    for f in sorted(funcs, key=lambda f: -len(f.vars)):
        for scope, members in groups:
            if i_bound is None or len(scope.union(f.vars)) <= i_bound:
                scope.update(f.vars)
                members.append(f)
                break
        else:
            groups.append((set(f.vars), [f]))
    return [members for _, members in groups]


def mc_run(
    net: BeliefNetwork,
    evidence: Mapping[int, int] | None,
    order: Sequence[int] | None = None,
    i_bound: int | None = None,
    *,
    jt: JoinGraph | None = None,
    max_table_size: int = DEFAULT_TABLE_LIMIT,
) -> BeliefResult:
    evidence = dict(evidence or {})
    t0 = time.perf_counter()
    if jt is None:
        jt = build_join_tree(net, order if order is not None else network_ordering(net))
    reduced = _reduce_network(net, evidence)
    ev = set(evidence)
    chi = [frozenset(c - ev) for c in jt.chi]
    theta = [frozenset(e.theta - ev) for e in jt.edges]
    psi = [[reduced[c] for c in cpts if reduced[c].vars] for cpts in jt.psi]
    received: dict[tuple[int, int], list[Factor]] = {}

    def cluster(u, exclude=None):
        funcs = list(psi[u])
        for w, _ in jt.incidence[u]:
            if w != exclude:
                funcs.extend(received.get((w, u), ()))
        return funcs

    for u, v in iteration_schedule(jt):
        elim = chi[u] - theta[jt.find_edge(u, v)]
        out = []
        for part in partition_functions(cluster(u, exclude=v), i_bound):
            keep = set().union(*(f.vars for f in part)) - elim
            h = sum_product(part, keep)
            if not h.table.sum() > 0.0:
                raise InconsistentEvidenceError(f"mini-message {u}->{v} has zero mass")
            if h.vars:
                out.append(normalize(h))
        received[(u, v)] = out

    free = [x for x in range(net.n) if x not in evidence]
    home = _belief_clusters(chi, free)
    beliefs = {}
    for u in sorted(set(home[x] for x in free)):
        xs = [x for x in free if home[x] == u]
        vs = sorted(chi[u])
        size = int(np.prod([net.cards[x] for x in vs], dtype=np.int64))
        if size > max_table_size:
            raise WidthGuardError(f"cluster {u} table of {size} entries exceeds the cap")
        joint = sum_product(cluster(u), vs, {x: net.cards[x] for x in vs})
        for x in xs:
            marg = joint.table.sum(axis=tuple(j for j, y in enumerate(joint.vars) if y != x))
            beliefs[x] = normalize(Factor((x,), (net.cards[x],), marg))
    elapsed = time.perf_counter() - t0
    return BeliefResult(beliefs, iterations_run=1, converged=False, wall_time=elapsed, sweep_time=elapsed, evidence=evidence)

