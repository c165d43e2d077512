"""Monte Carlo rollout engine.

Cost accounting mirrors the exact solver: the destination-age sum is accrued
at every stage 1..T and decisions happen at stages 1..T-1, so simulated means
converge to the solver's policy values.  Episode i of a run is seeded with
base_seed + i from a PCG64 stream, and compared policies share those episode
seeds (common random numbers), which tightens improvement estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, SystemState, sample_step


@dataclass(frozen=True)
class EpisodeResult:
    total_cost: int
    aaoi_per_source: tuple[float, ...]  # per-source age sum / T
    seed: int
    trajectory: tuple | None = None  # (t, state, action, event) when recorded


@dataclass(frozen=True)
class ExperimentSummary:
    policy: str
    params: ModelParams
    replications: int
    mean_total_cost: float
    stderr_total_cost: float
    mean_sum_aaoi: float
    base_seed: int


@dataclass(frozen=True)
class PolicyComparison:
    summaries: tuple[ExperimentSummary, ...]
    # 100*(mean_other - mean_first)/mean_other per summary; 0 for the first
    improvements_vs_first: tuple[float, ...]


def run_episode(
    policy,
    params: ModelParams,
    x0: SystemState,
    seed: int,
    record_trajectory: bool = False,
) -> EpisodeResult:
    """One seeded rollout.  Identical inputs give a bit-identical result."""
    rng = np.random.default_rng(seed)
    T = params.horizon
    x = x0
    mem = policy.initial_memory()
    per_source = [0] * params.n_sources
    traj: list | None = [] if record_trajectory else None
    for t in range(1, T + 1):
        for n, hn in enumerate(x.h):
            per_source[n] += hn
        if t < T:
            decision, mem = policy.decide(t, x, mem)
            x2, event = sample_step(x, decision.action, params, rng)
            if traj is not None:
                traj.append((t, x, decision.action, event))
            x = x2
    total = sum(per_source)
    aaoi = tuple(s / T for s in per_source)
    return EpisodeResult(total, aaoi, seed, tuple(traj) if traj is not None else None)


def run_experiment(
    policy,
    params: ModelParams,
    x0: SystemState,
    replications: int,
    base_seed: int,
) -> ExperimentSummary:
    """Replicated episodes with seeds base_seed, base_seed+1, ..."""
    if replications < 2:
        raise ValueError(f"need at least 2 replications, got {replications}")
    totals = np.empty(replications)
    for i in range(replications):
        totals[i] = run_episode(policy, params, x0, (base_seed + i) % 2**64).total_cost
    mean = float(totals.mean())
    stderr = float(totals.std(ddof=1) / math.sqrt(replications))
    mean_sum_aaoi = mean / params.horizon
    return ExperimentSummary(
        policy.name, params, replications, mean, stderr, mean_sum_aaoi, base_seed
    )


def improvement_pct(mean_a: float, mean_b: float) -> float:
    """Percentage improvement of A over B, relative to B's mean."""
    if mean_b == 0.0:
        return 0.0
    return 100.0 * (mean_b - mean_a) / mean_b


def compare_policies(
    policies,
    params: ModelParams,
    x0: SystemState,
    replications: int,
    base_seed: int,
) -> PolicyComparison:
    """Run every policy on the same episode seeds and report improvements of
    the first listed policy over each of the others."""
    if len(policies) < 2:
        raise ValueError("need at least two policies to compare")
    summaries = tuple(
        run_experiment(pol, params, x0, replications, base_seed) for pol in policies
    )
    first = summaries[0].mean_total_cost
    improvements = tuple(improvement_pct(first, s.mean_total_cost) for s in summaries)
    return PolicyComparison(summaries, improvements)
