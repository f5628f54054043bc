"""Exact posterior marginals by bucket elimination."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from ..decomposition import network_ordering
from ..errors import WidthGuardError
from ..factor import Factor, normalize, sum_product
from ..network import BeliefNetwork
from .engine import _reduce_network

EXACT_TABLE_LIMIT = 1 << 25


def _eliminate(funcs: list[Factor], var: int, cards, limit: int) -> list[Factor]:
    bucket = [f for f in funcs if var in f.vars]
    if not bucket:
        return funcs
    rest = [f for f in funcs if var not in f.vars]
    scope = set().union(*(f.vars for f in bucket))
    size = int(np.prod([cards[x] for x in scope], dtype=np.int64))
    if size > limit:
        raise WidthGuardError(f"bucket of variable {var} needs a table of {size} entries (cap {limit})")
    msg = sum_product(bucket, scope - {var})
    if msg.vars:
        rest.append(msg)
    elif not msg.table > 0.0:
        rest.append(msg)  # keep the zero so normalization reports it
    return rest


def bucket_elimination_posterior(
    net: BeliefNetwork,
    evidence: Mapping[int, int] | None = None,
    order: Sequence[int] | None = None,
    max_table_size: int = EXACT_TABLE_LIMIT,
) -> dict[int, Factor]:
    """Exact ``P(X | e)`` for every unobserved ``X``.

    One elimination run per query variable, each keeping its query to the end.
    Runs share the common prefix of the elimination sequence: eliminating the
    variables that come before the query is done once.
    """
    evidence = dict(evidence or {})
    funcs = [f for f in _reduce_network(net, evidence) if f.vars]
    order = list(order) if order is not None else network_ordering(net)
    sequence = [x for x in reversed(order) if x not in evidence]
    cards = net.cards

    beliefs = {}
    prefix = funcs
    for k, query in enumerate(sequence):
        state = prefix
        for x in sequence[k + 1 :]:
            state = _eliminate(state, x, cards, max_table_size)
        beliefs[query] = normalize(sum_product(state, [query], {query: cards[query]}))
        prefix = _eliminate(prefix, query, cards, max_table_size)
    return dict(sorted(beliefs.items()))
