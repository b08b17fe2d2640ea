"""Sanitizer-check distribution planning and N-version execution simulation."""

from .engine import (Alert, Divergence, Mode, SimulationConfig, SimulationReport, classify_event,
                     compute_metrics, enforce_lock_order, execute, run_simulation)
from .errors import NvxError, PartitionError, ProfileError, SimulationError, StallError, TraceError
from .partition import (PartitionPlan, PlanScore, evaluate_plan, oracle_partition, plan_partition,
                        validate_plan)
from .profile import (OverheadProfile, ProfileRun, SanitizerCatalog, derive_overhead, load_catalog,
                      load_profile)
from .trace import (Trace, WorkloadSpec, digest_args, generate_trace, parse_trace,
                    synthesize_variant)

__version__ = "0.1.0"

__all__ = [
    "Alert", "Divergence", "Mode", "SimulationConfig", "SimulationReport", "classify_event",
    "compute_metrics", "enforce_lock_order", "execute", "run_simulation",
    "NvxError", "PartitionError", "ProfileError", "SimulationError", "StallError", "TraceError",
    "PartitionPlan", "PlanScore", "evaluate_plan", "oracle_partition", "plan_partition", "validate_plan",
    "OverheadProfile", "ProfileRun", "SanitizerCatalog", "derive_overhead", "load_catalog", "load_profile",
    "Trace", "WorkloadSpec", "digest_args", "generate_trace", "parse_trace", "synthesize_variant",
]
