"""Finite-horizon age-of-information scheduling over unreliable channels.

Exact dynamic-programming solutions, index policies, Monte Carlo evaluation,
and numeric self-checks for a multi-source status-update system with
single-packet buffers and a limited number of parallel channels.
"""

from .config import ConfigError, GridPoint, SweepConfig, grid_point_seed, load_config
from .dp import (
    DegenerateP,
    DPTable,
    GapReport,
    InvalidDepth,
    NoAction,
    StateSpaceTooLarge,
    bound_constants,
    evaluate_policy,
    expected_age_sum_check,
    margin_decomposition,
    optimality_gap,
    reachable_states,
    solve_optimal,
)
from .model import (
    EMPTY,
    Action,
    InvalidEvent,
    InvalidState,
    ModelParams,
    SystemState,
    TransitionEvent,
    apply_transition,
    cost,
    enumerate_actions,
    enumerate_transitions,
    format_state,
    fresh_state,
    new_state,
    norm_inf,
    parse_state,
    sample_step,
    success_probs,
)
from .policies import (
    POLICY_NAMES,
    DeltaPolicy,
    OptimalPolicy,
    PIPolicy,
    RRPolicy,
    StateNotInTable,
    make_policy,
    min_schedule_margin,
    schedule_margin,
)
from .simulate import (
    EpisodeResult,
    ExperimentSummary,
    PolicyComparison,
    compare_policies,
    improvement_pct,
    run_episode,
    run_experiment,
)
from .verify import CheckResult, run_suite

__version__ = "0.1.0"

__all__ = [
    "EMPTY",
    "Action",
    "CheckResult",
    "ConfigError",
    "DPTable",
    "DegenerateP",
    "DeltaPolicy",
    "EpisodeResult",
    "ExperimentSummary",
    "GapReport",
    "GridPoint",
    "InvalidDepth",
    "InvalidEvent",
    "InvalidState",
    "ModelParams",
    "NoAction",
    "OptimalPolicy",
    "PIPolicy",
    "POLICY_NAMES",
    "PolicyComparison",
    "RRPolicy",
    "StateNotInTable",
    "StateSpaceTooLarge",
    "SweepConfig",
    "SystemState",
    "TransitionEvent",
    "apply_transition",
    "bound_constants",
    "compare_policies",
    "cost",
    "enumerate_actions",
    "enumerate_transitions",
    "evaluate_policy",
    "expected_age_sum_check",
    "format_state",
    "fresh_state",
    "grid_point_seed",
    "improvement_pct",
    "load_config",
    "make_policy",
    "margin_decomposition",
    "min_schedule_margin",
    "new_state",
    "norm_inf",
    "optimality_gap",
    "parse_state",
    "reachable_states",
    "run_episode",
    "run_experiment",
    "run_suite",
    "sample_step",
    "schedule_margin",
    "solve_optimal",
    "success_probs",
]
