"""Message ordering for one propagation iteration."""

from __future__ import annotations

import heapq

from ..decomposition import JoinGraph


def build_schedule(jg: JoinGraph) -> list[tuple[int, int]]:
    """Forward pass: one direction per edge, picked greedily.

    At each step the sender is the node with the fewest incoming messages
    still missing (lowest ``(u, v)`` on ties), so on a tree the forward pass
    is a leaves-to-root collect. Disconnected graphs need no special care.
    """
    deg = [len(x) for x in jg.incidence]
    received = [0] * jg.n_nodes
    open_edges = [sorted(jg.incidence[u]) for u in range(jg.n_nodes)]
    done_edges: set[int] = set()
    remaining = list(deg)

    def missing(u: int) -> int:
        # the message coming back over the chosen edge is never needed
        return deg[u] - 1 - received[u]

    heap = [(missing(u), u) for u in range(jg.n_nodes) if deg[u]]
    heapq.heapify(heap)
    forward = []
    while heap:
        m, u = heapq.heappop(heap)
        if remaining[u] == 0 or m != missing(u):
            continue
        nbrs = open_edges[u]
        while nbrs and nbrs[0][1] in done_edges:
            nbrs.pop(0)
        v, k = nbrs.pop(0)
        done_edges.add(k)
        forward.append((u, v))
        remaining[u] -= 1
        remaining[v] -= 1
        received[v] += 1
        if remaining[u]:
            heapq.heappush(heap, (missing(u), u))
        if remaining[v]:
            heapq.heappush(heap, (missing(v), v))
    return forward


def iteration_schedule(jg: JoinGraph) -> list[tuple[int, int]]:
    """Forward pass followed by the same edges reversed in both order and direction."""
    forward = build_schedule(jg)
    return forward + [(v, u) for u, v in reversed(forward)]
