"""Benchmark sweeps: generate instances, run every algorithm cell, score against a reference, emit CSV."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from functools import lru_cache
from pathlib import Path
from typing import Sequence

from .decomposition import build_join_tree, dual_join_graph, join_graph_structuring, min_fill_ordering
from .errors import InferenceError, WidthGuardError
from .generators import CodingSpec, GeneratedInstance, GridSpec, RandomNetSpec, gen_coding, gen_grid, gen_random
from .metrics import bit_error_rate, compare
from .network import BeliefNetwork, parse_evidence, parse_network
from .propagation import EngineConfig, bucket_elimination_posterior, ijgp_run, mc_run

log = logging.getLogger(__name__)

FAMILIES = ("random", "grid", "coding", "file")
ALGORITHMS = ("ibp", "ijgp", "mc", "exact")
CSV_HEADER = "family,n,k,c,p,seed,evidence,algorithm,i_bound,iterations,abs_err,rel_err,kl,ber,time_s"
MEAN_SEED = "mean"


@dataclass(frozen=True)
class ExperimentSpec:
    family: str
    n: int = 50
    k: int = 2
    c: int | None = None
    p: int = 2
    m: int = 10
    sigma: float = 0.3
    instances: int = 1
    seed: int = 0
    algorithms: tuple[str, ...] = ("ibp", "ijgp")
    i_bounds: tuple[int, ...] = (2,)
    iterations: tuple[int, ...] = (1,)
    evidence: tuple[int, ...] = (0,)
    model_path: str | None = None
    evidence_path: str | None = None
    include_build_time: bool = False
    cell_timeout: float | None = None
    exact_table_limit: int = 1 << 25
    workers: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        bad = set(self.algorithms) - set(ALGORITHMS)
        if bad:
            raise ValueError(f"unknown algorithms {sorted(bad)}")
        if self.instances < 0:
            raise ValueError("instances must be non-negative")
        if any(i < 1 for i in self.i_bounds) or any(t < 1 for t in self.iterations):
            raise ValueError("i-bounds and iteration counts must be positive")
        if self.family == "file" and not self.model_path:
            raise ValueError("family 'file' needs a model path")


@dataclass(frozen=True)
class ExperimentRecord:
    family: str
    n: int
    k: int
    c: int | None
    p: int | None
    seed: int | str  # instance seed, or "mean" for an aggregate row
    evidence: int
    algorithm: str
    i_bound: int | None
    iterations: int | None
    abs_err: float | None = None
    rel_err: float | None = None
    kl: float | None = None
    ber: float | None = None
    time_s: float | None = None

    @property
    def is_mean(self) -> bool:
        return self.seed == MEAN_SEED

    def cell(self) -> tuple:
        return (self.evidence, self.algorithm, self.i_bound or 0, self.iterations or 0)


_INT_FIELDS = ("n", "k", "c", "p", "evidence", "i_bound", "iterations")
_FLOAT_FIELDS = ("abs_err", "rel_err", "kl", "ber", "time_s")


def _family_columns(spec: ExperimentSpec, net: BeliefNetwork) -> dict:
    if spec.family == "random":
        return dict(n=spec.n, k=spec.k, c=spec.n if spec.c is None else spec.c, p=spec.p)
    if spec.family == "grid":
        return dict(n=spec.m * spec.m, k=spec.k, c=None, p=None)
    if spec.family == "coding":
        return dict(n=spec.n, k=2, c=None, p=spec.p)
    return dict(n=net.n, k=max(net.cards, default=0), c=None, p=None)


def _instance(spec: ExperimentSpec, seed: int, n_evidence: int) -> GeneratedInstance:
    if spec.family == "random":
        return gen_random(RandomNetSpec(spec.n, spec.k, spec.c, spec.p, seed, n_evidence))
    if spec.family == "grid":
        return gen_grid(GridSpec(spec.m, spec.k, seed, n_evidence))
    if spec.family == "coding":
        return gen_coding(CodingSpec(spec.n, spec.p, spec.sigma, seed))
    net = parse_network(Path(spec.model_path).read_text())
    ev = parse_evidence(Path(spec.evidence_path).read_text()) if spec.evidence_path else {}
    return GeneratedInstance(net, ev)


@lru_cache(maxsize=64)
def _cached_ordering(scopes: tuple) -> tuple[int, ...]:
    # coding instances share structure across noise levels; the ordering only depends on it
    g = {v: set() for v in range(len(scopes))}
    for scope in scopes:
        for a in scope:
            g[a].update(b for b in scope if b != a)
    return tuple(min_fill_ordering(g))


def _ordering(net: BeliefNetwork) -> list[int]:
    return list(_cached_ordering(tuple(f.vars for f in net.cpts)))


def _cells(spec: ExperimentSpec):
    for alg in spec.algorithms:
        if alg == "ibp":
            yield from ((alg, None, t) for t in spec.iterations)
        elif alg == "ijgp":
            yield from ((alg, i, t) for i in spec.i_bounds for t in spec.iterations)
        elif alg == "mc":
            yield from ((alg, i, 1) for i in spec.i_bounds)
        else:
            yield (alg, None, None)


def _score(inst: GeneratedInstance, exact, beliefs) -> dict:
    if inst.ground_truth is not None:
        return dict(ber=bit_error_rate(inst.ground_truth, beliefs))
    rep = compare(exact, beliefs)
    if not rep.kl_distance >= 0.0:
        raise AssertionError(f"negative KL distance {rep.kl_distance}")
    return dict(abs_err=rep.absolute_error, rel_err=rep.relative_error, kl=rep.kl_distance)


def _run_instance(spec: ExperimentSpec, seed: int, n_evidence: int) -> list[ExperimentRecord]:
    inst = _instance(spec, seed, n_evidence)
    net = inst.model()
    evidence = dict(inst.evidence)
    base = dict(family=spec.family, seed=seed, evidence=n_evidence, **_family_columns(spec, net))
    order = _ordering(net)

    exact = None
    exact_time = None
    if inst.ground_truth is None:
        t0 = time.perf_counter()
        try:
            exact = bucket_elimination_posterior(net, evidence, order, spec.exact_table_limit)
        except WidthGuardError as exc:
            log.warning("skipping instance seed=%s evidence=%s: exact reference unavailable (%s)", seed, n_evidence, exc)
            return []
        exact_time = time.perf_counter() - t0

    graphs: dict = {}

    def graph(alg, i):
        if (alg, i) not in graphs:
            t0 = time.perf_counter()
            jg = dual_join_graph(net) if alg == "ibp" else join_graph_structuring(net, order, i)
            graphs[(alg, i)] = (jg, time.perf_counter() - t0)
        return graphs[(alg, i)]

    rows = []
    for alg, i, iters in _cells(spec):
        row = dict(base, algorithm=alg, i_bound=i, iterations=iters)
        try:
            if alg == "exact":
                if exact is None:
                    continue
                rows.append(ExperimentRecord(**row, abs_err=0.0, rel_err=0.0, kl=0.0, time_s=exact_time))
                continue
            if alg == "mc":
                t0 = time.perf_counter()
                jt = build_join_tree(net, order)
                build = time.perf_counter() - t0
                res = mc_run(net, evidence, order, i, jt=jt)
            else:
                jg, build = graph(alg, i)
                cfg = EngineConfig(iterations=iters, time_limit=spec.cell_timeout)
                res = ijgp_run(net, evidence, jg, cfg, check=False)
                if res.timed_out:
                    log.warning("cell %s i=%s t=%s seed=%s stopped after %d iterations", alg, i, iters, seed, res.iterations_run)
        except (WidthGuardError, InferenceError) as exc:
            log.warning("skipping cell %s i=%s seed=%s: %s", alg, i, seed, exc)
            continue
        elapsed = res.wall_time + (build if spec.include_build_time else 0.0)
        rows.append(ExperimentRecord(**row, **_score(inst, exact, res.beliefs), time_s=elapsed))
    return rows


def _mean_rows(records: Sequence[ExperimentRecord]) -> list[ExperimentRecord]:
    groups: dict[tuple, list[ExperimentRecord]] = {}
    for r in records:
        groups.setdefault(r.cell(), []).append(r)
    out = []
    for key in sorted(groups):
        rs = groups[key]
        avg = {}
        for name in _FLOAT_FIELDS:
            vals = [getattr(r, name) for r in rs]
            avg[name] = None if any(v is None for v in vals) else math.fsum(vals) / len(vals)
        out.append(replace(rs[0], seed=MEAN_SEED, **avg))
    return out


def _sort_key(r: ExperimentRecord):
    return (r.is_mean, r.evidence, -1 if r.is_mean else r.seed, r.algorithm, r.i_bound or 0, r.iterations or 0)


def run_experiment(spec: ExperimentSpec) -> list[ExperimentRecord]:
    """Per-instance rows for every (instance, algorithm, i, iterations) cell, followed by mean rows."""
    jobs = [(spec, spec.seed + j, ev) for ev in spec.evidence for j in range(spec.instances)]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            chunks = list(pool.map(_run_instance, *zip(*jobs)))
    else:
        chunks = [_run_instance(*job) for job in jobs]
    records = sorted((r for chunk in chunks for r in chunk), key=_sort_key)
    return records + _mean_rows(records)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def format_csv(records: Sequence[ExperimentRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for r in records:
        writer.writerow(_fmt(getattr(r, f.name)) for f in fields(ExperimentRecord))
    return buf.getvalue()


def emit_csv(records: Sequence[ExperimentRecord], path) -> None:
    Path(path).write_text(format_csv(records))


def parse_csv(text: str) -> list[ExperimentRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != CSV_HEADER.split(","):
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    out = []
    for row in reader:
        vals: dict = {"family": row["family"], "algorithm": row["algorithm"]}
        vals["seed"] = row["seed"] if row["seed"] == MEAN_SEED else int(row["seed"])
        for name in _INT_FIELDS:
            vals[name] = int(row[name]) if row[name] else None
        for name in _FLOAT_FIELDS:
            vals[name] = float(row[name]) if row[name] else None
        out.append(ExperimentRecord(**vals))
    return out


def strip_time(text: str) -> str:
    """CSV text with the time column blanked, for replay comparisons."""
    return "\n".join(line.rsplit(",", 1)[0] for line in text.splitlines()) + "\n"
