"""Iterative join-graph propagation for belief networks, with baselines and benchmarks."""

from .decomposition import (
    DecompositionStats,
    Edge,
    JoinGraph,
    arc_separates,
    build_join_tree,
    decomposition_stats,
    dual_join_graph,
    induced_width,
    is_label_minimal,
    join_graph_structuring,
    min_fill_ordering,
    minimize_arc_labels,
    network_ordering,
    schematic_mini_bucket,
    validate_decomposition,
    variable_cycles,
)
from .errors import (
    InconsistentEvidenceError,
    InferenceError,
    InvalidDecompositionError,
    ModelInconsistencyError,
    ParseError,
    WidthGuardError,
)
from .factor import Factor, argmax_value, combine, marginalize, normalize, reduce_evidence, sum_product
from .network import (
    BeliefNetwork,
    brute_force_posterior,
    moral_graph,
    parse_evidence,
    parse_network,
    serialize_evidence,
    serialize_network,
    validate,
)
from .propagation import (
    BeliefResult,
    EngineConfig,
    bucket_elimination_posterior,
    build_schedule,
    compute_message,
    ibp_run,
    ijgp_run,
    mc_run,
)

__version__ = "0.1.0"
