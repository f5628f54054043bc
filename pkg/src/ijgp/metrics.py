"""Accuracy measures comparing approximate beliefs to exact ones.

Beliefs are mappings from variable to a single-variable :class:`Factor` (or a
1-d array). Only variables present in ``exact`` are scored, so callers pass
beliefs of unobserved variables only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .factor import Factor, argmax_value


@dataclass(frozen=True)
class ErrorReport:
    absolute_error: float
    relative_error: float
    kl_distance: float
    skipped_entries: int = 0


def _vector(b) -> np.ndarray:
    return np.asarray(b.values if isinstance(b, Factor) else b, dtype=float).reshape(-1)


def _pairs(exact: Mapping, approx: Mapping):
    if set(exact) - set(approx):
        raise ValueError(f"approximation lacks variables {sorted(set(exact) - set(approx))}")
    for v in sorted(exact):
        p, q = _vector(exact[v]), _vector(approx[v])
        if p.shape != q.shape:
            raise ValueError(f"variable {v}: domain sizes {p.size} and {q.size} differ")
        yield v, p, q


def absolute_error(exact: Mapping, approx: Mapping) -> float:
    diffs = [np.abs(p - q) for _, p, q in _pairs(exact, approx)]
    return float(np.concatenate(diffs).mean()) if diffs else 0.0


def _relative(exact, approx) -> tuple[float, int]:
    terms, skipped = [], 0
    for _, p, q in _pairs(exact, approx):
        pos = p > 0
        skipped += int((~pos).sum())
        terms.append(np.abs(p[pos] - q[pos]) / p[pos])
    flat = np.concatenate(terms) if terms else np.zeros(0)
    return (float(flat.mean()) if flat.size else 0.0), skipped


def relative_error(exact: Mapping, approx: Mapping) -> float:
    """Mean of |exact - approx| / exact over entries where exact > 0."""
    return _relative(exact, approx)[0]


def kl_distance(exact: Mapping, approx: Mapping) -> float:
    """Per-variable KL(exact || approx) in nats, averaged over variables.

    Returns ``inf`` when the approximation puts zero mass where the exact
    belief does not.
    """
    per_var = []
    for _, p, q in _pairs(exact, approx):
        pos = p > 0
        if np.any(q[pos] <= 0):
            return math.inf
        kl = float(np.sum(p[pos] * np.log(p[pos] / q[pos])))
        # rounding leaves tiny negatives when p and q agree; larger ones mean unnormalized input
        per_var.append(0.0 if -1e-12 < kl < 0.0 else kl)
    return float(np.mean(per_var)) if per_var else 0.0


def bit_error_rate(true_bits: Mapping[int, int], beliefs: Mapping) -> float:
    """Fraction of variables whose most likely value differs from the true bit."""
    if not true_bits:
        return 0.0
    wrong = 0
    for v, bit in true_bits.items():
        b = beliefs[v]
        f = b if isinstance(b, Factor) else Factor((v,), (len(_vector(b)),), _vector(b))
        if f.cards != (2,):
            raise ValueError(f"variable {v} is not binary")
        wrong += argmax_value(f) != int(bit)
    return wrong / len(true_bits)


def compare(exact: Mapping, approx: Mapping) -> ErrorReport:
    rel, skipped = _relative(exact, approx)
    return ErrorReport(absolute_error(exact, approx), rel, kl_distance(exact, approx), skipped)
