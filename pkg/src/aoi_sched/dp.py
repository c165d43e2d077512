"""Exact finite-horizon machinery: backward induction over reachable states,
fixed-policy value tables, the optimality-gap report for the best-margin
policy, and the recursively defined constants that bound that gap.

Stages run 1..T.  Cost is accrued every stage; decisions happen at stages
1..T-1; the terminal value is the bare stage cost.  Only states forward
reachable from the initial state are tabulated, which keeps the unbounded age
grid finite (ages grow by at most one per slot).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

from .model import (
    Action,
    ModelParams,
    SystemState,
    TransitionEvent,
    apply_transition,
    cost,
    enumerate_actions,
    enumerate_transitions,
    format_state,
    norm_inf,
    sources_with_packets,
    success_probs,
    transition_prob,
)
from .policies import DeltaPolicy, min_schedule_margin, schedule_margin

DEFAULT_STATE_CAP = 5_000_000


class StateSpaceTooLarge(RuntimeError):
    """Forward closure exceeded the configured state cap."""


class DegenerateP(ValueError):
    """p = 0 leaves the normalized gap undefined (the raw gap is identically 0)."""


class InvalidDepth(ValueError):
    """Bound-constant recursion starts at depth 2."""


class NoAction(ValueError):
    """Operation needs at least one packet-holding source."""


@dataclass(frozen=True)
class DPTable:
    """Per-stage value maps.  Keys are states, or (state, memory) pairs when the
    evaluated policy threads a memory value (augmented round-robin cursor)."""

    horizon: int
    policy_name: str | None  # None marks the optimal table
    augmented: bool
    stages: tuple[dict, ...]  # stages[t-1]: key -> (value, action-or-None)
    root_key: object

    def value(self, t: int, key) -> float:
        return self.stages[t - 1][key][0]

    def action(self, t: int, key):
        return self.stages[t - 1][key][1]

    def states(self, t: int):
        return self.stages[t - 1].keys()

    def root_value(self) -> float:
        return self.stages[0][self.root_key][0]


class BoundConstants(NamedTuple):
    k: int
    c1: float
    c2: float
    d1: float
    d2: float


@dataclass(frozen=True)
class GapReport:
    """Root-stage gap of the best-margin policy against the optimum, with the
    matching analytic bound p·p_d·(d1·norm_inf(x0) + d2)."""

    p: float
    diff: float
    p_pd: float
    z: float      # diff / (p * p_d)
    bound: float
    v_star: float
    v_delta: float


def reachable_states(
    params: ModelParams,
    x0: SystemState,
    horizon: int | None = None,
    cap: int = DEFAULT_STATE_CAP,
) -> list[set[SystemState]]:
    """Per-stage sets of states reachable from x0 under any action sequence."""
    T = params.horizon if horizon is None else horizon
    layers: list[set[SystemState]] = [{x0}]
    total = 1
    for _ in range(1, T):
        nxt: set[SystemState] = set()
        for x in layers[-1]:
            for a in enumerate_actions(x, params.n_channels):
                for x2, _pr in enumerate_transitions(x, a, params):
                    nxt.add(x2)
        total += len(nxt)
        if total > cap:
            raise StateSpaceTooLarge(f"reachable set exceeds cap: {total} > {cap}")
        layers.append(nxt)
    return layers


def solve_optimal(
    params: ModelParams, x0: SystemState, cap: int = DEFAULT_STATE_CAP
) -> DPTable:
    """Backward induction for the optimal values.

    V_T(x) = cost(x); V_t(x) = min_a [cost(x) + sum_x' P(x'|x,a) V_{t+1}(x')].
    Expectations use math.fsum so action values that are equal in exact
    arithmetic round identically; ties then resolve to the lexicographically
    smallest action because candidates are tried in that order.
    """
    layers = reachable_states(params, x0, cap=cap)
    T = params.horizon
    stages: list[dict] = [{} for _ in range(T)]
    stages[T - 1] = {x: (float(cost(x)), None) for x in layers[T - 1]}
    trans_cache: dict[tuple[SystemState, Action], list] = {}
    for t in range(T - 1, 0, -1):
        nxt = stages[t]
        cur = {}
        for x in layers[t - 1]:
            base = float(cost(x))
            best = None
            best_a = None
            for a in enumerate_actions(x, params.n_channels):
                pairs = trans_cache.get((x, a))
                if pairs is None:
                    pairs = trans_cache[(x, a)] = enumerate_transitions(x, a, params)
                q = base + math.fsum(pr * nxt[x2][0] for x2, pr in pairs)
                if best is None or q < best:
                    best, best_a = q, a
            cur[x] = (best, best_a)
        stages[t - 1] = cur
    return DPTable(T, None, False, tuple(stages), x0)


def evaluate_policy(
    policy, params: ModelParams, x0: SystemState, cap: int = DEFAULT_STATE_CAP
) -> DPTable:
    """Exact value of a fixed deterministic policy by the same backward pass,
    the minimization replaced by the policy's decision.

    A policy with memory (round-robin cursor) is evaluated on augmented keys
    (state, memory); memoryless policies key by bare states so their tables
    compare directly against the optimal one.
    """
    T = params.horizon
    mem0 = policy.initial_memory()
    augmented = mem0 is not None
    key0 = (x0, mem0) if augmented else x0
    layers: list[set] = [{key0}]
    decisions: list[dict] = []
    trans_cache: dict[tuple[SystemState, Action], list] = {}

    def transitions(x: SystemState, a: Action):
        pairs = trans_cache.get((x, a))
        if pairs is None:
            pairs = trans_cache[(x, a)] = enumerate_transitions(x, a, params)
        return pairs

    total = 1
    for t in range(1, T):
        dec: dict = {}
        nxt: set = set()
        for key in layers[-1]:
            x, mem = key if augmented else (key, None)
            decision, mem2 = policy.decide(t, x, mem)
            dec[key] = (decision.action, mem2)
            for x2, _pr in transitions(x, decision.action):
                nxt.add((x2, mem2) if augmented else x2)
        decisions.append(dec)
        total += len(nxt)
        if total > cap:
            raise StateSpaceTooLarge(f"reachable set exceeds cap: {total} > {cap}")
        layers.append(nxt)

    stages: list[dict] = [{} for _ in range(T)]
    stages[T - 1] = {
        key: (float(cost(key[0] if augmented else key)), None) for key in layers[T - 1]
    }
    for t in range(T - 1, 0, -1):
        nxt = stages[t]
        cur = {}
        for key in layers[t - 1]:
            x = key[0] if augmented else key
            action, mem2 = decisions[t - 1][key]
            ev = math.fsum(
                pr * nxt[(x2, mem2) if augmented else x2][0]
                for x2, pr in transitions(x, action)
            )
            cur[key] = (float(cost(x)) + ev, action)
        stages[t - 1] = cur
    return DPTable(T, policy.name, augmented, tuple(stages), key0)


def bound_constants(k: int, p: float, d: int) -> BoundConstants:
    """Gap-bound constants by forward recursion from the depth-2 base case.

    Base: c1(2) = (1+p_d)d, c2(2) = 0, d1(2) = 2d, d2(2) = 0.  Each extra
    depth feeds the previous constants back in, so all four grow monotonically
    in k for p > 0.
    """
    if k < 2:
        raise InvalidDepth(f"depth must be >= 2, got {k}")
    pd = 1.0 - (1.0 - p) ** d
    c1, c2 = (1.0 + pd) * d, 0.0
    d1, d2 = 2.0 * d, 0.0
    for j in range(3, k + 1):
        c1n = (1.0 + pd) * c1 + 2.0 * (j - 1) * d
        c2n = (1.0 + pd) * (c1 + c2)
        d1n = (1.0 + pd) * d1 + 2.0 * c1 + 2.0 * (j - 1) * d
        d2n = (1.0 + pd) * (d1 + d2) + 2.0 * (c1 + c2)
        c1, c2, d1, d2 = c1n, c2n, d1n, d2n
    return BoundConstants(k, c1, c2, d1, d2)


def optimality_gap(
    params: ModelParams, x0: SystemState, cap: int = DEFAULT_STATE_CAP
) -> GapReport:
    """Solve the instance twice (optimal and best-margin policy) and report the
    root-stage difference with its normalized form and analytic bound."""
    if params.p == 0.0:
        raise DegenerateP("p = 0: all policies coincide and the normalized gap is undefined")
    opt = solve_optimal(params, x0, cap=cap)
    delta = evaluate_policy(DeltaPolicy(params.n_channels), params, x0, cap=cap)
    v_star = opt.root_value()
    v_delta = delta.root_value()
    diff = v_delta - v_star
    pd = success_probs(params, 0).batch
    p_pd = params.p * pd
    z = diff / p_pd
    T = params.horizon
    if T <= 2:
        # gap is identically zero at the last two stages; no recursion depth exists
        bound = 0.0
    else:
        bc = bound_constants(T - 1, params.p, params.n_channels)
        bound = p_pd * (bc.d1 * norm_inf(x0) + bc.d2)
    return GapReport(params.p, diff, p_pd, z, bound, v_star, v_delta)


def expected_age_sum_check(
    x: SystemState, a: Action, params: ModelParams
) -> tuple[float, float]:
    """One-step identity: expected next destination-age sum against its closed
    form cost(x) + N + p * schedule_margin.  Returns (enumerated, closed form)."""
    lhs = math.fsum(pr * cost(x2) for x2, pr in enumerate_transitions(x, a, params))
    rhs = float(cost(x) + params.n_sources) + params.p * schedule_margin(x, a.scheduled)
    return lhs, rhs


class MarginDecomposition(NamedTuple):
    no_success: float  # action-invariant; conditional on every transfer failing
    success: float     # carries all action dependence


def margin_decomposition(
    x: SystemState, a: Action, params: ModelParams
) -> MarginDecomposition:
    """Split the expected next-state best margin by transfer outcome.

    With m = min_schedule_margin of the successor, the split satisfies
    E[m] = (1 - p_att)*no_success + p_batch*success, where p_att is the
    at-least-one-success probability of the attempts made and p_batch that of
    a full channel batch.  Both parts are bounded by d * norm_inf(x) in
    absolute value; either may be negative.  At p = 0 the success part is a
    0/0 limit and is reported as 0.0.
    """
    if not sources_with_packets(x):
        raise NoAction("no packet-holding source to schedule")
    d = params.n_channels
    all_sources = tuple(range(params.n_sources))
    arrival_sets = [
        c for nc in range(params.n_sources + 1) for c in combinations(all_sources, nc)
    ]
    no_succ_terms = []
    empty_action = Action(())
    for c in arrival_sets:
        ev = TransitionEvent((), c)
        pr = transition_prob(empty_action, ev, params)  # pure arrival probability
        if pr == 0.0:
            continue
        no_succ_terms.append(pr * min_schedule_margin(apply_transition(x, a, ev), d))
    u = math.fsum(no_succ_terms)

    succ_terms = []
    for nw in range(1, len(a.scheduled) + 1):
        for w in combinations(a.scheduled, nw):
            for c in arrival_sets:
                ev = TransitionEvent(w, c)
                pr = transition_prob(a, ev, params)
                if pr == 0.0:
                    continue
                succ_terms.append(pr * min_schedule_margin(apply_transition(x, a, ev), d))
    pd = success_probs(params, 0).batch
    v = math.fsum(succ_terms) / pd if pd > 0.0 else 0.0
    return MarginDecomposition(u, v)


def dump_table(table: DPTable, path) -> None:
    """Debug text export: one `t= state= value= action=` line per entry, sorted."""
    with open(path, "w", encoding="utf-8") as fh:
        name = table.policy_name or "optimal"
        fh.write(f"# value table policy={name} horizon={table.horizon}\n")
        for t in range(1, table.horizon + 1):
            for key in sorted(table.states(t)):
                x, mem = key if table.augmented else (key, None)
                value, action = table.stages[t - 1][key]
                line = f"t={t} state={format_state(x)}"
                if mem is not None:
                    line += f" cursor={mem}"
                line += f" value={value:.12g}"
                if action is not None:
                    line += " action=[" + ",".join(str(n + 1) for n in action.scheduled) + "]"
                fh.write(line + "\n")
