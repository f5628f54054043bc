"""Belief networks: representation, validation, text format and an enumeration oracle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import InconsistentEvidenceError, ParseError, WidthGuardError
from .factor import Factor, reduce_evidence

Evidence = Mapping[int, int]
MoralGraph = dict[int, set[int]]

# joint-table cap for brute_force_posterior (about 2**22 entries)
ENUMERATION_LIMIT = 1 << 22


@dataclass(frozen=True, eq=False)
class BeliefNetwork:
    """Variables ``0..n-1`` with one CPT each.

    ``cpts[i]`` is the CPT of variable ``i``; its scope is ``parents[i]`` plus
    ``i`` itself, stored in canonical (ascending) order like every factor.
    Construction does not check the model, see :func:`validate`.
    """

    cards: tuple[int, ...]
    parents: tuple[tuple[int, ...], ...]
    cpts: tuple[Factor, ...]

    @classmethod
    def from_tables(cls, cards: Sequence[int], parents: Sequence[Sequence[int]], tables) -> "BeliefNetwork":
        """Build from tables laid out with parents (ascending) first and the child last."""
        cards = tuple(int(c) for c in cards)
        parents = tuple(tuple(sorted(int(p) for p in ps)) for ps in parents)
        cpts = []
        for child, (ps, tab) in enumerate(zip(parents, tables)):
            scope = ps + (child,)
            cpts.append(Factor(scope, [cards[v] for v in scope], np.asarray(tab, dtype=float).ravel()))
        return cls(cards, parents, tuple(cpts))

    @property
    def n(self) -> int:
        return len(self.cards)

    def family(self, var: int) -> tuple[int, ...]:
        return self.parents[var] + (var,)

    def cpt_table(self, var: int) -> np.ndarray:
        """CPT of ``var`` as an array with axes (parents ascending..., child)."""
        f = self.cpts[var]
        order = [f.vars.index(v) for v in self.family(var)]
        return f.table.transpose(order)

    def __eq__(self, other):
        if not isinstance(other, BeliefNetwork):
            return NotImplemented
        return (
            self.cards == other.cards
            and self.parents == other.parents
            and all(a == b for a, b in zip(self.cpts, other.cpts))
        )

    __hash__ = None


def _has_cycle(parents: Sequence[Sequence[int]]) -> bool:
    n = len(parents)
    state = [0] * n  # 0 unseen, 1 on stack, 2 done
    for root in range(n):
        if state[root]:
            continue
        stack = [(root, iter(parents[root]))]
        state[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
            elif 0 <= nxt < n:
                if state[nxt] == 1:
                    return True
                if state[nxt] == 0:
                    state[nxt] = 1
                    stack.append((nxt, iter(parents[nxt])))
    return False


def validate(net: BeliefNetwork, tol: float = 1e-9) -> list[str]:
    """Return human-readable violations; an empty list means the network is well formed."""
    problems = []
    n = net.n
    if len(net.parents) != n or len(net.cpts) != n:
        problems.append(f"expected {n} parent lists and CPTs, got {len(net.parents)} and {len(net.cpts)}")
        return problems
    for v, c in enumerate(net.cards):
        if c < 1:
            problems.append(f"variable {v} has cardinality {c}")
    for v, ps in enumerate(net.parents):
        bad = [p for p in ps if not 0 <= p < n or p == v]
        if bad:
            problems.append(f"variable {v} has invalid parents {bad}")
    if _has_cycle(net.parents):
        problems.append("parent graph contains a directed cycle")
    for v, f in enumerate(net.cpts):
        family = tuple(sorted(net.family(v)))
        if f.vars != family:
            problems.append(f"CPT of variable {v} has scope {f.vars}, expected {family}")
            continue
        if any(f.card_of(u) != net.cards[u] for u in f.vars):
            problems.append(f"CPT of variable {v} disagrees with declared cardinalities")
            continue
        sums = f.table.sum(axis=f.vars.index(v))
        worst = float(np.max(np.abs(sums - 1.0))) if sums.size else 0.0
        if worst > tol:
            problems.append(f"CPT of variable {v} is not normalized (max row deviation {worst:.3g})")
    return problems


def moral_graph(net: BeliefNetwork) -> MoralGraph:
    """Undirected graph linking every pair of variables that share a CPT."""
    g: MoralGraph = {v: set() for v in range(net.n)}
    for f in net.cpts:
        for a in f.vars:
            g[a].update(b for b in f.vars if b != a)
    return g


def brute_force_posterior(net: BeliefNetwork, evidence: Evidence | None = None) -> dict[int, Factor]:
    """Exact marginals of every unobserved variable by enumerating the full joint."""
    evidence = dict(evidence or {})
    free = [v for v in range(net.n) if v not in evidence]
    total = int(np.prod([net.cards[v] for v in free], dtype=np.int64)) if free else 1
    if total > ENUMERATION_LIMIT:
        raise WidthGuardError(f"joint over {len(free)} variables has {total} entries")

    # one row per complete assignment of the free variables
    grid = np.indices([net.cards[v] for v in free]).reshape(len(free), -1) if free else np.zeros((0, 1), int)
    full = np.empty((net.n, grid.shape[1]), dtype=np.int64)
    for v, val in evidence.items():
        full[v] = val
    for k, v in enumerate(free):
        full[v] = grid[k]

    joint = np.ones(grid.shape[1])
    for f in net.cpts:
        joint *= f.table[tuple(full[v] for v in f.vars)]
    mass = joint.sum()
    if not mass > 0.0:
        raise InconsistentEvidenceError("evidence has zero probability")

    beliefs = {}
    for k, v in enumerate(free):
        b = np.bincount(grid[k], weights=joint, minlength=net.cards[v]) / mass
        beliefs[v] = Factor((v,), (net.cards[v],), b)
    return beliefs


# --- text format -------------------------------------------------------------


def _tokens(text: str):
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0]
        for tok in line.split():
            yield tok, lineno


class _Reader:
    def __init__(self, text):
        self._it = _tokens(text)
        self.line = 1

    def next(self, what: str) -> str:
        try:
            tok, self.line = next(self._it)
        except StopIteration:
            raise ParseError(f"unexpected end of input while reading {what}", self.line) from None
        return tok

    def int(self, what: str) -> int:
        tok = self.next(what)
        try:
            return int(tok)
        except ValueError:
            raise ParseError(f"expected an integer for {what}, got {tok!r}", self.line) from None

    def float(self, what: str) -> float:
        tok = self.next(what)
        try:
            return float(tok)
        except ValueError:
            raise ParseError(f"expected a number for {what}, got {tok!r}", self.line) from None

    def done(self) -> bool:
        try:
            tok, line = next(self._it)
        except StopIteration:
            return True
        self.line = line
        return False


def parse_network(text: str) -> BeliefNetwork:
    r = _Reader(text)
    header = r.next("header")
    if header.upper() != "BAYES":
        raise ParseError(f"expected header 'BAYES', got {header!r}", r.line)
    n = r.int("variable count")
    if n < 0:
        raise ParseError("negative variable count", r.line)
    cards = [r.int(f"cardinality of variable {v}") for v in range(n)]
    if any(c < 1 for c in cards):
        raise ParseError("cardinalities must be positive", r.line)
    m = r.int("CPT count")
    if m != n:
        raise ParseError(f"expected {n} CPTs, got {m}", r.line)
    scopes = []
    for i in range(m):
        k = r.int(f"scope size of CPT {i}")
        if k < 1:
            raise ParseError(f"CPT {i} has an empty scope", r.line)
        scope = [r.int(f"scope of CPT {i}") for _ in range(k)]
        if any(not 0 <= v < n for v in scope) or len(set(scope)) != k:
            raise ParseError(f"CPT {i} has an invalid scope {scope}", r.line)
        scopes.append(scope)
    tables = []
    for i, scope in enumerate(scopes):
        t = r.int(f"table length of CPT {i}")
        expect = int(np.prod([cards[v] for v in scope]))
        if t != expect:
            raise ParseError(f"CPT {i} declares {t} entries, its scope needs {expect}", r.line)
        tables.append([r.float(f"table entry of CPT {i}") for _ in range(t)])
    if not r.done():
        raise ParseError("trailing tokens after the last table", r.line)

    by_child: dict[int, int] = {}
    for i, scope in enumerate(scopes):
        child = scope[-1]
        if child in by_child:
            raise ParseError(f"variable {child} is the child of CPTs {by_child[child]} and {i}")
        by_child[child] = i
    missing = [v for v in range(n) if v not in by_child]
    if missing:
        raise ParseError(f"variables without a CPT: {missing}")

    parents, cpts = [], []
    for v in range(n):
        scope = scopes[by_child[v]]
        parents.append(tuple(sorted(scope[:-1])))
        try:
            cpts.append(Factor(scope, [cards[u] for u in scope], tables[by_child[v]]))
        except ValueError as exc:
            raise ParseError(f"CPT {by_child[v]}: {exc}") from None
    return BeliefNetwork(tuple(cards), tuple(parents), tuple(cpts))


def serialize_network(net: BeliefNetwork) -> str:
    lines = ["BAYES", str(net.n), " ".join(map(str, net.cards)), str(net.n)]
    for v in range(net.n):
        fam = net.family(v)
        lines.append(" ".join(map(str, (len(fam),) + fam)))
    for v in range(net.n):
        values = net.cpt_table(v).reshape(-1)
        lines.append("")
        lines.append(str(values.size))
        lines.append(" ".join(repr(float(x)) for x in values))
    return "\n".join(lines) + "\n"


def parse_evidence(text: str) -> dict[int, int]:
    r = _Reader(text)
    count = r.int("evidence count")
    ev = {}
    for _ in range(count):
        var = r.int("evidence variable")
        ev[var] = r.int("evidence value")
    if not r.done():
        raise ParseError("trailing tokens after evidence pairs", r.line)
    return ev


def serialize_evidence(evidence: Evidence) -> str:
    lines = [str(len(evidence))]
    lines += [f"{v} {val}" for v, val in sorted(evidence.items())]
    return "\n".join(lines) + "\n"


def check_evidence(net: BeliefNetwork, evidence: Evidence) -> list[str]:
    problems = []
    for v, val in evidence.items():
        if not 0 <= v < net.n:
            problems.append(f"evidence on unknown variable {v}")
        elif not 0 <= val < net.cards[v]:
            problems.append(f"evidence value {val} out of range for variable {v}")
    return problems


def reduced_cpts(net: BeliefNetwork, evidence: Evidence) -> list[Factor]:
    return [reduce_evidence(f, evidence) for f in net.cpts]
