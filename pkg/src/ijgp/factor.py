"""Dense tabular factors over discrete variables.

A factor's scope is always kept in ascending variable order and its table is a
numpy array whose axes follow that order, so the flattened (C-order) table has
the last scope variable changing fastest.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InconsistentEvidenceError, ModelInconsistencyError

# numpy's einsum accepts at most this many distinct integer subscripts
_EINSUM_MAX_LABELS = 52
_EINSUM_MAX_OPERANDS = 30


class Factor:
    """An immutable non-negative table over an ordered set of variables."""

    __slots__ = ("vars", "cards", "table")

    def __init__(self, vars: Sequence[int], cards: Sequence[int], table, *, check: bool = True):
        vars = tuple(int(v) for v in vars)
        cards = tuple(int(c) for c in cards)
        if len(vars) != len(cards):
            raise ValueError("vars and cards must have the same length")
        if len(set(vars)) != len(vars):
            raise ValueError(f"duplicate variable in scope {vars}")
        arr = np.array(table, dtype=np.float64)
        size = int(np.prod(cards, dtype=np.int64)) if cards else 1
        if arr.size != size:
            raise ValueError(f"table has {arr.size} entries, scope {vars} needs {size}")
        arr = arr.reshape(cards)
        order = sorted(range(len(vars)), key=vars.__getitem__)
        if order != list(range(len(vars))):
            arr = np.ascontiguousarray(arr.transpose(order))
            vars = tuple(vars[k] for k in order)
            cards = tuple(cards[k] for k in order)
        if check and arr.size and not (np.all(np.isfinite(arr)) and arr.min() >= 0.0):
            raise ValueError("factor entries must be finite and non-negative")
        arr.flags.writeable = False
        self.vars = vars
        self.cards = cards
        self.table = arr

    @classmethod
    def _raw(cls, vars: tuple, cards: tuple, arr: np.ndarray) -> "Factor":
        # trusted fast path: vars already sorted, arr already shaped
        f = object.__new__(cls)
        arr = np.asarray(arr, dtype=np.float64).reshape(cards)
        arr.flags.writeable = False
        f.vars = vars
        f.cards = cards
        f.table = arr
        return f

    @classmethod
    def scalar(cls, value: float = 1.0) -> "Factor":
        return cls._raw((), (), np.array(float(value)))

    @classmethod
    def ones(cls, vars: Sequence[int], cards: Sequence[int]) -> "Factor":
        return cls(vars, cards, np.ones(int(np.prod(cards, dtype=np.int64))))

    @property
    def values(self) -> np.ndarray:
        """Flat row-major view of the table."""
        return self.table.reshape(-1)

    @property
    def size(self) -> int:
        return self.table.size

    def card_of(self, var: int) -> int:
        return self.cards[self.vars.index(var)]

    def __repr__(self):
        return f"Factor(vars={self.vars}, cards={self.cards}, values={self.values.tolist()})"

    def __eq__(self, other):
        if not isinstance(other, Factor):
            return NotImplemented
        return (
            self.vars == other.vars
            and self.cards == other.cards
            and np.array_equal(self.table, other.table)
        )

    __hash__ = None

    def __mul__(self, other: "Factor") -> "Factor":
        return combine(self, other)


def _merge_scopes(factors: Iterable[Factor]) -> dict[int, int]:
    cards: dict[int, int] = {}
    for f in factors:
        for v, c in zip(f.vars, f.cards):
            known = cards.setdefault(v, c)
            if known != c:
                raise ModelInconsistencyError(
                    f"variable {v} has cardinality {known} in one factor and {c} in another"
                )
    return cards


def _expand(f: Factor, union: Sequence[int]) -> np.ndarray:
    shape = [1] * len(union)
    pos = {v: k for k, v in enumerate(union)}
    for v, c in zip(f.vars, f.cards):
        shape[pos[v]] = c
    return f.table.reshape(shape)


def combine(f: Factor, g: Factor) -> Factor:
    """Pointwise product over the union of both scopes."""
    cards = _merge_scopes((f, g))
    union = tuple(sorted(cards))
    arr = _expand(f, union) * _expand(g, union)
    return Factor._raw(union, tuple(cards[v] for v in union), np.ascontiguousarray(arr))


def combine_all(factors: Iterable[Factor]) -> Factor:
    result = Factor.scalar(1.0)
    for f in factors:
        result = combine(result, f)
    return result


def marginalize(f: Factor, elim: Iterable[int]) -> Factor:
    """Sum ``f`` over every variable in ``elim``."""
    elim = set(elim)
    missing = elim.difference(f.vars)
    if missing:
        raise ValueError(f"cannot sum out {sorted(missing)}: not in scope {f.vars}")
    if not elim:
        return f
    axes = tuple(k for k, v in enumerate(f.vars) if v in elim)
    keep = [k for k, v in enumerate(f.vars) if v not in elim]
    arr = np.asarray(f.table.sum(axis=axes), dtype=np.float64)
    return Factor._raw(
        tuple(f.vars[k] for k in keep), tuple(f.cards[k] for k in keep), arr
    )


def reduce_evidence(f: Factor, evidence: Mapping[int, int]) -> Factor:
    """Slice ``f`` at the observed values; variables absent from ``f`` are ignored."""
    hit = [v for v in f.vars if v in evidence]
    if not hit:
        return f
    index = []
    vars_, cards_ = [], []
    for v, c in zip(f.vars, f.cards):
        if v in evidence:
            val = int(evidence[v])
            if not 0 <= val < c:
                raise ValueError(f"evidence value {val} out of range for variable {v}")
            index.append(val)
        else:
            index.append(slice(None))
            vars_.append(v)
            cards_.append(c)
    arr = np.array(f.table[tuple(index)], dtype=np.float64)
    return Factor._raw(tuple(vars_), tuple(cards_), arr)


def normalize(f: Factor) -> Factor:
    total = float(f.table.sum())
    if not total > 0.0:
        raise InconsistentEvidenceError("cannot normalize a factor with zero total mass")
    return Factor._raw(f.vars, f.cards, f.table / total)


def argmax_value(f: Factor) -> int:
    """Most likely value of a single-variable factor; ties go to the lowest index."""
    if len(f.vars) != 1:
        raise ValueError(f"argmax_value needs a single-variable factor, got scope {f.vars}")
    return int(np.argmax(f.table))


def _contract_sequentially(factors: list[Factor], keep: set) -> Factor:
    # too many operands for einsum: fold left, summing each variable out once no later factor needs it
    last = {}
    for idx, f in enumerate(factors):
        for v in f.vars:
            last[v] = idx
    acc = Factor.scalar(1.0)
    for idx, f in enumerate(factors):
        acc = combine(acc, f)
        done = [v for v in acc.vars if v not in keep and last[v] == idx]
        if done:
            acc = marginalize(acc, done)
    return acc


def sum_product(
    factors: Sequence[Factor], keep: Iterable[int], cards: Mapping[int, int] | None = None
) -> Factor:
    """Multiply ``factors`` and sum out everything not in ``keep``.

    ``cards`` supplies cardinalities for kept or eliminated variables that no
    factor mentions; a kept variable missing from every factor broadcasts as
    all-ones, an eliminated one contributes its cardinality as a constant.
    """
    factors = list(factors)
    scope_cards = _merge_scopes(factors)
    keep = sorted(set(keep))
    cards = dict(cards or {})
    for v in keep:
        if v not in scope_cards and v not in cards:
            raise ValueError(f"no cardinality known for kept variable {v}")

    present = sorted(scope_cards)
    if len(present) > _EINSUM_MAX_LABELS or len(factors) > _EINSUM_MAX_OPERANDS:
        result = _contract_sequentially(factors, set(keep))
    elif not factors:
        result = Factor.scalar(1.0)
    else:
        label = {v: k for k, v in enumerate(present)}
        args = []
        for f in factors:
            args.append(f.table)
            args.append([label[v] for v in f.vars])
        out_vars = tuple(v for v in keep if v in scope_cards)
        args.append([label[v] for v in out_vars])
        arr = np.einsum(*args, optimize=False)
        result = Factor._raw(
            out_vars, tuple(scope_cards[v] for v in out_vars), np.asarray(arr, dtype=np.float64)
        )

    extra = [v for v in keep if v not in scope_cards]
    if extra:
        result = combine(result, Factor.ones(extra, [cards[v] for v in extra]))
    for v, c in cards.items():
        if v not in keep and v not in scope_cards:
            result = Factor._raw(result.vars, result.cards, result.table * c)
    return result
