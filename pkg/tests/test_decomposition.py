import itertools
import random

import numpy as np
import pytest

from conftest import A, B, C, D, E, F, G, small_random_net
from ijgp.decomposition import (
    Edge,
    JoinGraph,
    arc_separates,
    build_join_tree,
    decomposition_stats,
    dual_join_graph,
    induced_width,
    is_forest,
    is_label_minimal,
    join_graph_structuring,
    min_fill_ordering,
    minimize_arc_labels,
    network_ordering,
    schematic_mini_bucket,
    validate_decomposition,
    variable_cycles,
)
from ijgp.network import moral_graph


def naive_min_fill(g):
    """Recompute every fill count from scratch at every step."""
    adj = {v: set(n) for v, n in g.items()}
    seq = []
    while adj:
        fill = {}
        for v, nb in adj.items():
            fill[v] = sum(1 for a, b in itertools.combinations(sorted(nb), 2) if b not in adj[a])
        best = min(fill.values())
        v = min(x for x in fill if fill[x] == best)
        nb = adj.pop(v)
        for a in nb:
            adj[a].discard(v)
            adj[a] |= nb - {a}
        seq.append(v)
    return seq[::-1]


def clique(k):
    return {v: set(range(k)) - {v} for v in range(k)}


def random_graph(n, p, seed):
    rng = random.Random(seed)
    g = {v: set() for v in range(n)}
    for a, b in itertools.combinations(range(n), 2):
        if rng.random() < p:
            g[a].add(b)
            g[b].add(a)
    return g


# --- orderings ---------------------------------------------------------------


def test_clique_width():
    g = clique(4)
    assert induced_width(g, min_fill_ordering(g)) == 3
    for order in itertools.permutations(range(4)):
        assert induced_width(g, order) == 3


def test_chain_has_width_one_and_low_index_ties():
    g = {0: {1}, 1: {0, 2}, 2: {1}}
    order = min_fill_ordering(g)
    assert induced_width(g, order) == 1
    # all fills are zero; eliminated first (last position) is vertex 0
    assert order[-1] == 0


@pytest.mark.parametrize("seed", range(12))
def test_incremental_min_fill_matches_recompute(seed):
    g = random_graph(18, 0.25, seed)
    assert min_fill_ordering(g) == naive_min_fill(g)


@pytest.mark.parametrize("seed", range(3))
def test_min_fill_never_beats_exhaustive_optimum(seed):
    g = random_graph(7, 0.45, seed)
    best = min(induced_width(g, order) for order in itertools.permutations(range(7)))
    assert induced_width(g, min_fill_ordering(g)) >= best


def test_seeded_tie_break_is_reproducible():
    g = random_graph(15, 0.3, 4)
    a = min_fill_ordering(g, seed=11)
    assert a == min_fill_ordering(g, seed=11)
    assert sorted(a) == list(range(15))


def test_induced_width_rejects_non_permutation():
    with pytest.raises(ValueError):
        induced_width(clique(3), [0, 1])


# --- structuring on the seven-variable example ---------------------------------

ORDER = [A, B, C, D, F, E, G]


def test_bucket_of_f_splits_into_fcd_and_bf(seven_var_net):
    trace = schematic_mini_bucket(seven_var_net, ORDER, 3)
    split = {v: ids for v, ids in trace.buckets.items() if len(ids) > 1}
    assert list(split) == [F]
    scopes = [trace.minibuckets[i].scope for i in split[F]]
    assert scopes == [frozenset({C, D, F}), frozenset({B, F})]

    jg = join_graph_structuring(seven_var_net, ORDER, 3)
    in_edges = [e for e in jg.edges if e.kind == "in"]
    assert len(in_edges) == 1 and in_edges[0].theta == {F}
    assert {jg.chi[in_edges[0].u], jg.chi[in_edges[0].v]} == {frozenset({C, D, F}), frozenset({B, F})}
    assert validate_decomposition(seven_var_net, jg) == []
    assert is_label_minimal(jg)


def test_seven_variable_join_tree(seven_var_net):
    jt = build_join_tree(seven_var_net, ORDER)
    assert is_forest(jt) and validate_decomposition(seven_var_net, jt) == []
    assert max(len(c) for c in jt.chi) == 4  # bucket F holds {B, C, D, F}


def test_i_bound_respected_and_out_labels_are_message_scopes():
    for seed in range(10):
        net = small_random_net(seed, n=14, p=3).network
        order = network_ordering(net)
        for i in (2, 3, 5):
            trace = schematic_mini_bucket(net, order, i)
            jg = join_graph_structuring(net, order, i)
            assert all(len(c) <= max(i, 4) for c in jg.chi)  # a CPT wider than i gets its own cluster
            for mb in trace.minibuckets:
                if mb.target is not None:
                    assert jg.edges[jg.find_edge(mb.id, mb.target)].theta == mb.message_scope


def test_structuring_rejects_bad_inputs(seven_var_net):
    with pytest.raises(ValueError):
        schematic_mini_bucket(seven_var_net, ORDER, 0)
    with pytest.raises(ValueError):
        schematic_mini_bucket(seven_var_net, ORDER[:-1], 3)


# --- arc-labeled graphs --------------------------------------------------------


def triangle():
    """Three clusters over {1,2,4}, {2,3,4}, {1,3,4} (renumbered 0..3), labeled by separators."""
    chi = [{0, 1, 3}, {1, 2, 3}, {0, 2, 3}]
    edges = [Edge(0, 1, frozenset({1, 3})), Edge(1, 2, frozenset({2, 3})), Edge(0, 2, frozenset({0, 3}))]
    return JoinGraph.build(chi, [[], [], []], edges)


def test_triangle_cycles_on_shared_variable_only():
    jg = triangle()
    assert variable_cycles(jg) == [3]
    assert not is_label_minimal(jg)
    m = minimize_arc_labels(jg)
    assert is_label_minimal(m)
    # canonical order drops variable 3 from the first edge it can leave
    assert [(e.u, e.v, sorted(e.theta)) for e in m.edges] == [(0, 1, [1]), (0, 2, [0, 3]), (1, 2, [2, 3])]
    for var in range(4):
        comps = [u for u, c in enumerate(m.chi) if var in c]
        labeled = sum(1 for e in m.edges if var in e.theta)
        assert labeled == len(comps) - 1


def test_minimization_keeps_valid_graphs_valid():
    for seed in range(8):
        net = small_random_net(seed, n=10).network
        order = network_ordering(net)
        jg = join_graph_structuring(net, order, 2)
        full = jg.with_labels([jg.chi[e.u] & jg.chi[e.v] for e in jg.edges])
        m = minimize_arc_labels(full)
        assert validate_decomposition(net, m) == []
        assert is_label_minimal(m)


def test_dual_graph_is_star_per_variable():
    for seed in range(6):
        net = small_random_net(seed, n=10, p=3).network
        jg = dual_join_graph(net)
        assert validate_decomposition(net, jg) == []
        assert is_label_minimal(jg)
        for e in jg.edges:
            assert e.theta
            for x in e.theta:
                assert x in (e.u, e.v)  # every labeled edge touches the variable's own CPT cluster


def test_validate_reports_broken_connectivity(seven_var_net):
    jg = join_graph_structuring(seven_var_net, ORDER, 3)
    cut = jg.with_labels([set() if e.kind == "in" else e.theta for e in jg.edges])
    problems = validate_decomposition(seven_var_net, cut)
    assert len(problems) == 1 and f"variable {F}" in problems[0]


def test_validate_reports_misplaced_cpt(seven_var_net):
    jg = join_graph_structuring(seven_var_net, ORDER, 3)
    psi = [list(p) for p in jg.psi]
    psi[0].append(0)  # CPT of A placed twice
    bad = JoinGraph.build(jg.chi, psi, jg.edges)
    assert any("CPT 0" in p for p in validate_decomposition(seven_var_net, bad))


def bfs_separated(jg, w, y, cut_ids):
    reach = set(w)
    frontier = list(w)
    while frontier:
        u = frontier.pop()
        for k, e in enumerate(jg.edges):
            if k in cut_ids or u not in (e.u, e.v):
                continue
            nxt = e.other(u)
            if nxt not in reach:
                reach.add(nxt)
                frontier.append(nxt)
    return not (reach & set(y))


def test_arc_separation_matches_reachability():
    rng = random.Random(0)
    for seed in range(6):
        net = small_random_net(seed, n=12).network
        jg = join_graph_structuring(net, network_ordering(net), 2)
        nodes = list(range(jg.n_nodes))
        for _ in range(40):
            w = set(rng.sample(nodes, 2))
            y = set(rng.sample([u for u in nodes if u not in w], 2))
            cut = set(rng.sample(range(len(jg.edges)), rng.randint(0, len(jg.edges))))
            assert arc_separates(jg, w, y, cut) == bfs_separated(jg, w, y, cut)
    jg = triangle()
    assert arc_separates(jg, [0], [2], [(0, 2), jg.edges[0]])
    assert not arc_separates(jg, [0], [2], [2])


def test_stats(seven_var_net):
    st = decomposition_stats(join_graph_structuring(seven_var_net, ORDER, 3))
    assert st.cluster_count == 8
    assert st.max_cluster_size == 3 and st.induced_width == 2
    assert st.max_label_size == 2 and st.separator_width == 2
