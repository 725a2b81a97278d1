"""Minimum core counts for deadline-bound batches of personalized PageRank queries."""

from .errors import (
    ConvergenceError, CoreplanError, InfeasibleError, ParseError, QueryFailure,
    ResourceError, ValidationError,
)
from .graph import Graph, load_edge_list, out_degree, out_neighbors, write_edge_list
from .planner import (
    Plan, PlanConfig, allocate, hoeffding_baseline, lemma1_bound, plan_ideal, plan_real,
    sample_size, z_for_confidence,
)
from .ppr import PprEstimate, PprParams, PushState, derive_params, fora_query, forward_push, power_iteration_ppr
from .workload import QuerySet, SyntheticWorkload, TimingStats, generate_queries, preprocess
from .executor import ExecutionReport, run_ideal, run_real, run_slot, simulate

__version__ = "0.1.0"
