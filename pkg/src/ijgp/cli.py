"""Command-line entry point: ``solve``, ``bench`` and ``decompose``.

Exit codes: 0 success, 1 usage error, 2 model or evidence error, 3 size guard exceeded.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .decomposition import decomposition_stats, dual_join_graph, join_graph_structuring, network_ordering, validate_decomposition
from .errors import InconsistentEvidenceError, ModelInconsistencyError, ParseError, WidthGuardError
from .harness import ALGORITHMS, ExperimentSpec, emit_csv, format_csv, run_experiment
from .network import BeliefNetwork, check_evidence, parse_evidence, parse_network, validate
from .propagation import EngineConfig, bucket_elimination_posterior, ijgp_run, mc_run

EXIT_OK, EXIT_USAGE, EXIT_MODEL, EXIT_GUARD = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _name_list(text: str) -> tuple[str, ...]:
    names = tuple(t.strip() for t in text.split(",") if t.strip())
    bad = [t for t in names if t not in ALGORITHMS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown algorithms {bad}")
    return names


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ijgp", description="Join-graph propagation for belief networks.")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="posterior marginals for one model")
    s.add_argument("--model", required=True)
    s.add_argument("--evidence")
    s.add_argument("--algorithm", choices=ALGORITHMS, default="ijgp")
    s.add_argument("--i-bound", type=int, default=2)
    s.add_argument("--iterations", type=int, default=10)
    s.add_argument("--seed", type=int, default=None, help="random tie-breaking for the elimination ordering")
    s.add_argument("--out")

    b = sub.add_parser("bench", help="benchmark sweep to CSV")
    b.add_argument("--family", choices=("random", "grid", "coding", "file"), required=True)
    b.add_argument("--n", type=int, default=50, help="variables (random) or information bits (coding)")
    b.add_argument("--k", type=int, default=2)
    b.add_argument("--c", type=int, default=None)
    b.add_argument("--p", type=int, default=2)
    b.add_argument("--m", type=int, default=10)
    b.add_argument("--sigma", type=float, default=0.3)
    b.add_argument("--model")
    b.add_argument("--evidence-file")
    b.add_argument("--instances", type=int, default=1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--algorithms", type=_name_list, default=("ibp", "ijgp"))
    b.add_argument("--i-bounds", type=_int_list, default=(2,))
    b.add_argument("--iterations", type=_int_list, default=(1,))
    b.add_argument("--evidence", type=_int_list, default=(0,))
    b.add_argument("--timeout", type=float, default=None, help="per-cell time limit in seconds")
    b.add_argument("--include-build-time", action="store_true")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out")

    d = sub.add_parser("decompose", help="build a join-graph and report its shape")
    d.add_argument("--model", required=True)
    d.add_argument("--i-bound", type=int, default=None)
    d.add_argument("--seed", type=int, default=None)
    d.add_argument("--dual", action="store_true", help="use the dual join-graph instead")
    d.add_argument("--dump", action="store_true")
    return parser


def _summary(problems: list[str], limit: int = 5) -> str:
    text = "; ".join(problems[:limit])
    return text + (f" (and {len(problems) - limit} more)" if len(problems) > limit else "")


def _load_model(path: str) -> BeliefNetwork:
    try:
        net = parse_network(Path(path).read_text())
    except OSError as exc:
        raise ModelInconsistencyError(f"cannot read model: {exc}")
    problems = validate(net)
    if problems:
        raise ModelInconsistencyError(_summary(problems))
    return net


def _load_evidence(net: BeliefNetwork, path: str | None) -> dict[int, int]:
    if not path:
        return {}
    try:
        ev = parse_evidence(Path(path).read_text())
    except OSError as exc:
        raise ModelInconsistencyError(f"cannot read evidence: {exc}")
    problems = check_evidence(net, ev)
    if problems:
        raise ModelInconsistencyError(_summary(problems))
    return ev


def format_beliefs(net: BeliefNetwork, beliefs: dict, evidence: dict) -> str:
    lines = []
    for v in range(net.n):
        if v in evidence:
            probs = [1.0 if a == evidence[v] else 0.0 for a in range(net.cards[v])]
        else:
            probs = beliefs[v].values.tolist()
        lines.append(f"X{v} " + " ".join(f"{p:.9g}" for p in probs))
    return "\n".join(lines) + "\n"


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _solve(args) -> int:
    net = _load_model(args.model)
    ev = _load_evidence(net, args.evidence)
    if args.i_bound < 1 or args.iterations < 1:
        raise UsageError("--i-bound and --iterations must be positive")
    if args.algorithm == "exact":
        beliefs = bucket_elimination_posterior(net, ev, network_ordering(net, args.seed))
    elif args.algorithm == "mc":
        beliefs = mc_run(net, ev, network_ordering(net, args.seed), args.i_bound).beliefs
    else:
        if args.algorithm == "ibp":
            jg = dual_join_graph(net)
        else:
            jg = join_graph_structuring(net, network_ordering(net, args.seed), args.i_bound)
        beliefs = ijgp_run(net, ev, jg, EngineConfig(iterations=args.iterations), check=False).beliefs
    _write(format_beliefs(net, beliefs, ev), args.out)
    return EXIT_OK


def _bench(args) -> int:
    try:
        spec = ExperimentSpec(
            family=args.family, n=args.n, k=args.k, c=args.c, p=args.p, m=args.m, sigma=args.sigma,
            instances=args.instances, seed=args.seed, algorithms=args.algorithms,
            i_bounds=args.i_bounds, iterations=args.iterations, evidence=args.evidence,
            model_path=args.model, evidence_path=args.evidence_file,
            include_build_time=args.include_build_time, cell_timeout=args.timeout, workers=args.workers,
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    records = run_experiment(spec)
    if args.out:
        emit_csv(records, args.out)
    else:
        sys.stdout.write(format_csv(records))
    return EXIT_OK


def _decompose(args) -> int:
    net = _load_model(args.model)
    if args.dual:
        jg = dual_join_graph(net)
    else:
        jg = join_graph_structuring(net, network_ordering(net, args.seed), args.i_bound)
    problems = validate_decomposition(net, jg)
    if args.dump:
        sys.stdout.write(jg.dump())
    st = decomposition_stats(jg)
    sys.stdout.write(
        f"clusters: {st.cluster_count}\nmax_cluster_size: {st.max_cluster_size}\n"
        f"max_label_size: {st.max_label_size}\nmax_degree: {st.max_degree}\n"
        f"separator_width: {st.separator_width}\nvalid: {'yes' if not problems else 'no'}\n"
    )
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
        handler = {"solve": _solve, "bench": _bench, "decompose": _decompose}[args.command]
        return handler(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except WidthGuardError as exc:
        print(f"size guard exceeded: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ParseError, ModelInconsistencyError, InconsistentEvidenceError) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
