from .engine import (
    BeliefResult,
    CompiledGraph,
    EngineConfig,
    MessageBundle,
    PropagationState,
    compute_message,
    ibp_run,
    ijgp_run,
    prepare_state,
)
from .exact import bucket_elimination_posterior
from .mc import mc_run, partition_functions
from .schedule import build_schedule, iteration_schedule

__all__ = [
    "BeliefResult",
    "CompiledGraph",
    "EngineConfig",
    "MessageBundle",
    "PropagationState",
    "build_schedule",
    "bucket_elimination_posterior",
    "compute_message",
    "ibp_run",
    "ijgp_run",
    "iteration_schedule",
    "mc_run",
    "partition_functions",
    "prepare_state",
]
