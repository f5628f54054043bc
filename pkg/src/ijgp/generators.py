"""Seeded benchmark families: random networks, grids and random-parity coding networks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .factor import Factor
from .network import BeliefNetwork


@dataclass(frozen=True)
class RandomNetSpec:
    n: int
    k: int = 2
    c: int | None = None  # CPTs with parents; defaults to n
    p: int = 2
    seed: int = 0
    evidence: int = 0

    def __post_init__(self):
        c = self.n if self.c is None else self.c
        if not (0 <= c <= self.n and 0 <= self.p < max(self.n, 1) and self.k >= 2):
            raise ValueError(f"invalid random network parameters {self}")


@dataclass(frozen=True)
class GridSpec:
    m: int
    k: int = 2
    seed: int = 0
    evidence: int = 0

    def __post_init__(self):
        if self.m < 2 or self.k < 2:
            raise ValueError(f"invalid grid parameters {self}")


@dataclass(frozen=True)
class CodingSpec:
    k_info: int
    p: int = 4
    sigma: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.k_info < 1 or not 1 <= self.p <= self.k_info or not self.sigma > 0:
            raise ValueError(f"invalid coding parameters {self}")


@dataclass(eq=False)
class GeneratedInstance:
    network: BeliefNetwork
    evidence: dict = field(default_factory=dict)
    ground_truth: dict | None = None
    # coding only: channel likelihood per bit, folded into that bit's CPT by model()
    likelihoods: dict | None = None

    def model(self) -> BeliefNetwork:
        """The network the engines run on (channel likelihoods absorbed)."""
        if not self.likelihoods:
            return self.network
        return absorb_likelihoods(self.network, self.likelihoods)


def absorb_likelihoods(net: BeliefNetwork, likelihoods: dict) -> BeliefNetwork:
    cpts = list(net.cpts)
    for v, lik in likelihoods.items():
        f = cpts[v]
        shape = [1] * len(f.vars)
        shape[f.vars.index(v)] = net.cards[v]
        cpts[v] = Factor._raw(f.vars, f.cards, f.table * np.asarray(lik, dtype=float).reshape(shape))
    return BeliefNetwork(net.cards, net.parents, tuple(cpts))


def _random_cpt(rng, k: int, n_parents: int) -> np.ndarray:
    tab = rng.uniform(0.0, 1.0, size=(k,) * n_parents + (k,))
    return tab / tab.sum(axis=-1, keepdims=True)


def ancestral_sample(net: BeliefNetwork, topo: list[int], rng) -> dict[int, int]:
    sample: dict[int, int] = {}
    for v in topo:
        tab = net.cpt_table(v)[tuple(sample[p] for p in net.parents[v])]
        sample[v] = int(rng.choice(net.cards[v], p=tab / tab.sum()))
    return sample


def _draw_evidence(net: BeliefNetwork, topo: list[int], count: int, rng) -> dict[int, int]:
    if count <= 0:
        return {}
    if count > net.n:
        raise ValueError(f"cannot observe {count} of {net.n} variables")
    chosen = rng.choice(net.n, size=count, replace=False)
    sample = ancestral_sample(net, topo, rng)
    return {int(v): sample[int(v)] for v in sorted(chosen)}


def gen_random(spec: RandomNetSpec) -> GeneratedInstance:
    """Random DAG: the last ``c`` variables of a random order get ``p`` earlier parents each."""
    n, k, p = spec.n, spec.k, spec.p
    c = n if spec.c is None else spec.c
    rng = np.random.default_rng(spec.seed)
    topo = [int(v) for v in rng.permutation(n)]
    first_child = n - c
    if c and first_child < p:
        raise ValueError(f"{c} children with {p} parents each need n - c >= p (n={n})")
    parents: list[tuple[int, ...]] = [()] * n
    for pos in range(first_child, n):
        v = topo[pos]
        chosen = rng.choice(pos, size=p, replace=False)
        parents[v] = tuple(sorted(topo[int(j)] for j in chosen))
    tables = [None] * n
    for v in topo:
        tables[v] = _random_cpt(rng, k, len(parents[v]))
    net = BeliefNetwork.from_tables([k] * n, parents, tables)
    return GeneratedInstance(net, _draw_evidence(net, topo, spec.evidence, rng))


def gen_grid(spec: GridSpec) -> GeneratedInstance:
    """M-by-M lattice; cell (r, c) has parents (r-1, c) and (r, c-1) when they exist."""
    m, k = spec.m, spec.k
    rng = np.random.default_rng(spec.seed)
    n = m * m
    parents = []
    for r in range(m):
        for c in range(m):
            ps = []
            if r > 0:
                ps.append((r - 1) * m + c)
            if c > 0:
                ps.append(r * m + c - 1)
            parents.append(tuple(sorted(ps)))
    tables = [_random_cpt(rng, k, len(ps)) for ps in parents]
    net = BeliefNetwork.from_tables([k] * n, parents, tables)
    return GeneratedInstance(net, _draw_evidence(net, list(range(n)), spec.evidence, rng))


def parity_table(n_parents: int) -> np.ndarray:
    """XOR indicator with axes (parents..., child)."""
    grid = np.indices((2,) * (n_parents + 1))
    return (grid.sum(axis=0) % 2 == 0).astype(float)


def gen_coding(spec: CodingSpec) -> GeneratedInstance:
    """Rate-1/2 random-parity code over a Gaussian channel.

    Bits ``0..K-1`` carry information (uniform priors); bit ``K+j`` is the XOR
    of ``p`` distinct information bits. Every bit is sent as -1/+1 with additive
    noise of standard deviation ``sigma``; the received value becomes a
    likelihood on that bit.
    """
    kk, p, sigma = spec.k_info, spec.p, spec.sigma
    rng = np.random.default_rng(spec.seed)
    parents: list[tuple[int, ...]] = [()] * kk
    for _ in range(kk):
        parents.append(tuple(sorted(int(j) for j in rng.choice(kk, size=p, replace=False))))
    tables = [np.array([0.5, 0.5])] * kk + [parity_table(p)] * kk
    net = BeliefNetwork.from_tables([2] * (2 * kk), parents, tables)

    info = rng.integers(0, 2, size=kk)
    bits = {v: int(info[v]) for v in range(kk)}
    for j in range(kk):
        bits[kk + j] = int(sum(bits[u] for u in parents[kk + j]) % 2)
    sent = np.array([2.0 * bits[v] - 1.0 for v in range(2 * kk)])
    received = sent + sigma * rng.standard_normal(2 * kk)
    # P(y | bit=1) / P(y | bit=0) = exp(2y / sigma^2)
    z = 2.0 * received / sigma**2
    likelihoods = {v: np.array([expit(-z[v]), expit(z[v])]) for v in range(2 * kk)}
    return GeneratedInstance(net, {}, ground_truth=bits, likelihoods=likelihoods)
