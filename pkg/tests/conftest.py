import itertools

import numpy as np
import pytest

from ijgp.generators import RandomNetSpec, gen_random
from ijgp.network import BeliefNetwork


def product_oracle(factors, keep, cards):
    """Loop-based multiply-and-sum over every joint assignment; the slow reference for factor algebra."""
    allv = sorted(cards)
    keep = sorted(keep)
    out = np.zeros([cards[v] for v in keep])
    for assign in itertools.product(*(range(cards[v]) for v in allv)):
        a = dict(zip(allv, assign))
        val = 1.0
        for f in factors:
            val *= f.table[tuple(a[v] for v in f.vars)]
        out[tuple(a[v] for v in keep)] += val
    return out


def small_random_net(seed, n=8, k=2, p=2, evidence=0):
    return gen_random(RandomNetSpec(n, k, n - p, p, seed, evidence))


@pytest.fixture
def two_node_net():
    # P(a) = [0.3, 0.7], P(b | a) rows a=0: [0.9, 0.1], a=1: [0.2, 0.8]
    return BeliefNetwork.from_tables([2, 2], [(), (0,)], [[0.3, 0.7], [[0.9, 0.1], [0.2, 0.8]]])


A, B, C, D, E, F, G = range(7)


@pytest.fixture
def seven_var_net():
    """p(a) p(b|a) p(c|a,b) p(d|b) p(f|c,d) p(e|b,f) p(g|e,f) with seeded random tables."""
    parents = [(), (A,), (A, B), (B,), (B, F), (C, D), (E, F)]
    rng = np.random.default_rng(7)
    tables = []
    for ps in parents:
        t = rng.uniform(0.1, 1.0, size=(2,) * len(ps) + (2,))
        tables.append(t / t.sum(axis=-1, keepdims=True))
    return BeliefNetwork.from_tables([2] * 7, parents, tables)


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
