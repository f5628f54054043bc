"""Iterative join-graph propagation.

Two interchangeable engines run the same schedule:

* ``reference`` follows the message bundles literally: functions untouched by
  the eliminator are forwarded as they are, the rest are multiplied and summed.
* ``compiled`` (the default) keeps one dense table per directed edge over its
  label and runs whole sweeps inside a numba kernel. Forwarding a function
  unchanged or folding it into the summed product gives the same values, so
  both engines agree up to rounding and the normalizing constant.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..decomposition import JoinGraph, dual_join_graph, validate_decomposition
from ..errors import InconsistentEvidenceError, InvalidDecompositionError, WidthGuardError
from ..factor import Factor, normalize, reduce_evidence, sum_product
from ..network import BeliefNetwork, check_evidence
from . import kernels
from .schedule import iteration_schedule

DEFAULT_TABLE_LIMIT = 1 << 24


@dataclass(frozen=True)
class EngineConfig:
    iterations: int = 1
    normalize_messages: bool = True
    convergence_epsilon: float | None = None
    time_limit: float | None = None  # seconds; checked between iterations
    max_table_size: int = DEFAULT_TABLE_LIMIT

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")


@dataclass
class BeliefResult:
    beliefs: dict  # variable -> normalized single-variable Factor (unobserved only)
    iterations_run: int = 0
    converged: bool = False
    wall_time: float = 0.0
    sweep_time: float = 0.0
    timed_out: bool = False
    evidence: dict = field(default_factory=dict)


@dataclass
class MessageBundle:
    source: int
    target: int
    individual: tuple  # factors forwarded unchanged
    combined: Factor | None  # product of the rest, summed over the eliminator


@dataclass
class PropagationState:
    """A join-graph with evidence absorbed, plus the latest bundle on each directed edge."""

    jg: JoinGraph
    cards: dict
    evidence: dict
    chi: list  # cluster variables minus evidence
    theta: list  # edge labels minus evidence
    psi: list  # evidence-reduced CPTs per cluster
    normalize: bool = True
    bundles: dict = field(default_factory=dict)


def _reduce_network(net: BeliefNetwork, evidence: Mapping[int, int]) -> list[Factor]:
    bad = check_evidence(net, evidence)
    if bad:
        raise ValueError("; ".join(bad))
    reduced = [reduce_evidence(f, evidence) for f in net.cpts]
    for f in reduced:
        if not f.vars and not f.table > 0.0:
            raise InconsistentEvidenceError("evidence has zero probability under a CPT")
    return reduced


def prepare_state(net: BeliefNetwork, evidence: Mapping[int, int], jg: JoinGraph, normalize_messages=True) -> PropagationState:
    evidence = dict(evidence)
    reduced = _reduce_network(net, evidence)
    ev = set(evidence)
    return PropagationState(
        jg=jg,
        cards=dict(enumerate(net.cards)),
        evidence=evidence,
        chi=[frozenset(c - ev) for c in jg.chi],
        theta=[frozenset(e.theta - ev) for e in jg.edges],
        psi=[[reduced[c] for c in cpts] for cpts in jg.psi],
        normalize=normalize_messages,
    )


def _cluster_functions(state: PropagationState, u: int, exclude: int | None) -> list[Factor]:
    funcs = list(state.psi[u])
    for w, _ in state.jg.incidence[u]:
        if w == exclude:
            continue
        b = state.bundles.get((w, u))
        if b is not None:
            funcs.extend(b.individual)
            if b.combined is not None:
                funcs.append(b.combined)
    return funcs


def compute_message(state: PropagationState, u: int, v: int) -> MessageBundle:
    """The bundle ``u`` sends to ``v`` given the bundles currently stored in ``state``."""
    k = state.jg.find_edge(u, v)
    elim = state.chi[u] - state.theta[k]
    individual, rest = [], []
    for f in _cluster_functions(state, u, exclude=v):
        if elim.intersection(f.vars):
            rest.append(f)
        elif f.vars:
            individual.append(f)
        elif not f.table > 0.0:
            raise InconsistentEvidenceError(f"zero constant in message {u}->{v}")
    combined = None
    if rest:
        keep = set().union(*(f.vars for f in rest)) - elim
        combined = sum_product(rest, keep)
        total = combined.table.sum()
        if not np.isfinite(total):
            raise FloatingPointError(f"message {u}->{v} overflowed; enable message normalization")
        if not total > 0.0:
            raise InconsistentEvidenceError(f"message {u}->{v} has zero mass")
        if not combined.vars:
            combined = None  # a constant; absorbed by the final normalization
        elif state.normalize:
            combined = normalize(combined)
    return MessageBundle(u, v, tuple(individual), combined)


def _reference_beliefs(state: PropagationState, free: list[int]) -> dict[int, Factor]:
    home = _belief_clusters(state.chi, free)
    beliefs = {}
    for x in free:
        u = home[x]
        funcs = _cluster_functions(state, u, exclude=None)
        beliefs[x] = normalize(sum_product(funcs, [x], {x: state.cards[x]}))
    return beliefs


def _belief_clusters(chi, free) -> dict[int, int]:
    home = {}
    for u, c in enumerate(chi):
        for x in c:
            home.setdefault(x, u)
    missing = [x for x in free if x not in home]
    if missing:
        raise InvalidDecompositionError(f"variables {missing} appear in no cluster")
    return home


def _run_reference(state: PropagationState, schedule, cfg: EngineConfig, free) -> BeliefResult:
    result = BeliefResult(beliefs={}, evidence=dict(state.evidence))
    t0 = time.perf_counter()
    for it in range(cfg.iterations):
        change = 0.0
        for u, v in schedule:
            new = compute_message(state, u, v)
            old = state.bundles.get((u, v))
            change = max(change, _combined_change(old, new))
            state.bundles[(u, v)] = new
        result.iterations_run = it + 1
        if cfg.convergence_epsilon is not None and it > 0 and change < cfg.convergence_epsilon:
            result.converged = True
            break
        if cfg.time_limit is not None and time.perf_counter() - t0 > cfg.time_limit:
            result.timed_out = it + 1 < cfg.iterations
            break
    result.sweep_time = time.perf_counter() - t0
    result.beliefs = _reference_beliefs(state, free)
    return result


def _combined_change(old: MessageBundle | None, new: MessageBundle) -> float:
    a = None if old is None else old.combined
    b = new.combined
    if a is None and b is None:
        return 0.0
    if a is None or b is None or a.vars != b.vars:
        return np.inf
    return float(np.max(np.abs(a.table - b.table)))


class CompiledGraph:
    """Flat-buffer layout of an evidence-reduced join-graph for the numba kernels."""

    def __init__(self, net: BeliefNetwork, evidence: Mapping[int, int], jg: JoinGraph, max_table_size=DEFAULT_TABLE_LIMIT):
        evidence = dict(evidence)
        reduced = _reduce_network(net, evidence)
        ev = set(evidence)
        cards = net.cards
        self.jg = jg
        self.cluster_vars = [tuple(sorted(c - ev)) for c in jg.chi]
        sizes = [math.prod(cards[x] for x in vs) for vs in self.cluster_vars]
        if sizes and max(sizes) > max_table_size:
            raise WidthGuardError(f"cluster table of {max(sizes)} entries exceeds the cap {max_table_size}")

        psi_tables = []
        for u, vs in enumerate(self.cluster_vars):
            funcs = [reduced[c] for c in jg.psi[u]]
            if not funcs:
                psi_tables.append(np.ones(sizes[u]))
            elif len(funcs) == 1 and funcs[0].vars == vs:
                psi_tables.append(funcs[0].values)
            else:
                psi_tables.append(sum_product(funcs, vs, {x: cards[x] for x in vs}).values)
        self.psi_len = np.array(sizes, dtype=np.int64)
        self.psi_off = np.concatenate([[0], np.cumsum(self.psi_len)[:-1]]).astype(np.int64)
        self.psi_buf = np.concatenate(psi_tables) if psi_tables else np.zeros(0)

        labels = [tuple(sorted(e.theta - ev)) for e in jg.edges]
        n_dir = 2 * len(jg.edges)
        self.src = np.empty(n_dir, dtype=np.int64)
        self.rev = np.arange(n_dir, dtype=np.int64) ^ 1
        self.msg_len = np.empty(n_dir, dtype=np.int64)
        for k, e in enumerate(jg.edges):
            self.src[2 * k], self.src[2 * k + 1] = e.u, e.v
            width = math.prod(cards[x] for x in labels[k])
            self.msg_len[2 * k] = self.msg_len[2 * k + 1] = width
        self.msg_off = np.concatenate([[0], np.cumsum(self.msg_len)[:-1]]).astype(np.int64)
        self.msg_init = np.ones(int(self.msg_len.sum()))

        maps, map_off, pos = [], {}, 0
        for u, vs in enumerate(self.cluster_vars):
            for _, k in jg.incidence[u]:
                m = _projection(vs, labels[k], cards)
                map_off[(u, k)] = pos
                maps.append(m)
                pos += m.size
        self.maps = np.concatenate(maps).astype(np.int64) if maps else np.zeros(0, np.int64)
        self.out_map = np.array([map_off[(int(self.src[d]), d // 2)] for d in range(n_dir)], dtype=np.int64)

        inc_ptr, inc_din, inc_map = [0], [], []
        for u in range(jg.n_nodes):
            for _, k in jg.incidence[u]:
                inc_din.append(2 * k + 1 if jg.edges[k].u == u else 2 * k)
                inc_map.append(map_off[(u, k)])
            inc_ptr.append(len(inc_din))
        self.inc_ptr = np.array(inc_ptr, dtype=np.int64)
        self.inc_din = np.array(inc_din, dtype=np.int64)
        self.inc_map = np.array(inc_map, dtype=np.int64)
        self.cards = cards
        self.max_cluster = max(sizes, default=1)
        self.max_label = int(self.msg_len.max()) if n_dir else 1

    def directed_id(self, u: int, v: int) -> int:
        k = self.jg.find_edge(u, v)
        return 2 * k if self.jg.edges[k].u == u else 2 * k + 1

    def run(self, schedule, cfg: EngineConfig, free, result: BeliefResult) -> np.ndarray:
        order = np.array([self.directed_id(u, v) for u, v in schedule], dtype=np.int64)
        msgs = self.msg_init.copy()
        scratch = np.empty(self.max_cluster)
        acc = np.empty(self.max_label)
        args = (
            order, self.src, self.rev, self.msg_off, self.msg_len, self.out_map,
            self.inc_ptr, self.inc_din, self.inc_map, self.psi_off, self.psi_len,
            self.psi_buf, self.maps, msgs, scratch, acc, cfg.normalize_messages,
        )
        eps = -1.0 if cfg.convergence_epsilon is None else float(cfg.convergence_epsilon)
        t0 = time.perf_counter()
        if cfg.time_limit is None:
            failed, result.iterations_run, result.converged = kernels.sweeps(cfg.iterations, eps, *args)
        else:
            failed = -1
            for it in range(cfg.iterations):
                failed, change = kernels.sweep(*args)
                result.iterations_run = it + 1
                if failed >= 0:
                    break
                if eps >= 0.0 and it > 0 and change < eps:
                    result.converged = True
                    break
                if time.perf_counter() - t0 > cfg.time_limit:
                    result.timed_out = it + 1 < cfg.iterations
                    break
        if failed >= 0:
            u = int(self.src[failed])
            if not np.isfinite(msgs[self.msg_off[failed] : self.msg_off[failed] + self.msg_len[failed]]).all():
                raise FloatingPointError(f"message from cluster {u} overflowed; enable message normalization")
            raise InconsistentEvidenceError(f"message from cluster {u} has zero mass")
        result.sweep_time = time.perf_counter() - t0
        return msgs

    def cluster_table(self, u: int, msgs: np.ndarray) -> np.ndarray:
        flat = kernels.cluster_product(
            u, self.inc_ptr, self.inc_din, self.inc_map, self.msg_off,
            self.psi_off, self.psi_len, self.psi_buf, self.maps, msgs,
        )
        return flat.reshape([self.cards[x] for x in self.cluster_vars[u]])

    def beliefs(self, msgs: np.ndarray, free) -> dict[int, Factor]:
        home = _belief_clusters(self.cluster_vars, free)
        by_cluster: dict[int, list[int]] = {}
        for x in free:
            by_cluster.setdefault(home[x], []).append(x)
        beliefs = {}
        for u, xs in sorted(by_cluster.items()):
            tab = self.cluster_table(u, msgs)
            vs = self.cluster_vars[u]
            for x in xs:
                a = vs.index(x)
                marg = tab.sum(axis=tuple(j for j in range(len(vs)) if j != a))
                beliefs[x] = normalize(Factor._raw((x,), (self.cards[x],), np.asarray(marg, dtype=float)))
        return beliefs


def _projection(cluster_vars, label_vars, cards) -> np.ndarray:
    """Flat label-table index for every flat entry of the cluster table."""
    shape = [cards[x] for x in cluster_vars]
    strides = [0] * len(shape)
    step = 1
    for x in reversed(label_vars):
        strides[cluster_vars.index(x)] = step
        step *= cards[x]
    idx = np.zeros(1, dtype=np.int64)
    for c, st in zip(shape, strides):
        idx = (idx[:, None] + np.arange(c, dtype=np.int64) * st).reshape(-1)
    return idx


def ijgp_run(
    net: BeliefNetwork,
    evidence: Mapping[int, int] | None,
    jg: JoinGraph,
    cfg: EngineConfig | None = None,
    *,
    engine: str = "compiled",
    check: bool = True,
    schedule=None,
) -> BeliefResult:
    """Run ``cfg.iterations`` forward/backward sweeps and read beliefs off the clusters.

    Each variable's belief comes from the lowest-numbered cluster holding it.
    """
    cfg = cfg or EngineConfig()
    evidence = dict(evidence or {})
    if check:
        problems = validate_decomposition(net, jg)
        if problems:
            raise InvalidDecompositionError("; ".join(problems[:5]))
    free = [x for x in range(net.n) if x not in evidence]
    schedule = iteration_schedule(jg) if schedule is None else schedule
    t0 = time.perf_counter()
    if engine == "reference":
        state = prepare_state(net, evidence, jg, cfg.normalize_messages)
        result = _run_reference(state, schedule, cfg, free)
    elif engine == "compiled":
        cg = CompiledGraph(net, evidence, jg, cfg.max_table_size)
        result = BeliefResult(beliefs={}, evidence=evidence)
        msgs = cg.run(schedule, cfg, free, result)
        result.beliefs = cg.beliefs(msgs, free)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    result.wall_time = time.perf_counter() - t0
    return result


def ibp_run(net: BeliefNetwork, evidence: Mapping[int, int] | None, cfg: EngineConfig | None = None, *, jg: JoinGraph | None = None, **kw) -> BeliefResult:
    """Iterative belief propagation: the same engine on the minimal dual join-graph."""
    return ijgp_run(net, evidence, jg if jg is not None else dual_join_graph(net), cfg, **kw)
