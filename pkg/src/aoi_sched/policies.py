"""Scheduling policies behind one decision interface.

Three online heuristics plus a table-backed optimal policy:

* delta: schedule the packet holders whose delivery would cut the most age,
  i.e. the largest h[n] - g[n] (equivalently smallest buffered-minus-delivered
  margin g[n] - h[n]).
* pi: schedule the packet holders with the largest destination age h[n],
  ignoring buffered ages.
* rr: cyclic cursor over sources; the default variant skips empty buffers so
  it stays work-conserving, the strict variant burns channel slots on them.

Every decision schedules min(N_x, d) sources (strict round-robin may schedule
fewer), sorted ascending, with index order breaking score ties.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .model import EMPTY, Action, ModelParams, SystemState, sources_with_packets


class StateNotInTable(KeyError):
    """Looked up a (stage, state) the solver never reached."""


class PolicyDecision(NamedTuple):
    action: Action
    scores: tuple[int, ...] | None  # per chosen source, the ranked quantity


def schedule_margin(x: SystemState, scheduled: tuple[int, ...]) -> int:
    """Sum of g[n] - h[n] over the scheduled sources (nonpositive by the state invariant)."""
    return sum(x.g[n] - x.h[n] for n in scheduled)


def min_schedule_margin(x: SystemState, d: int) -> int:
    """Smallest schedule_margin over all work-conserving actions: the sum of the
    min(N_x, d) most negative per-source margins.  Zero when nothing is buffered."""
    margins = sorted(x.g[n] - x.h[n] for n in sources_with_packets(x))
    k = min(len(margins), d)
    return sum(margins[:k])


def delta_decide(x: SystemState, d: int) -> PolicyDecision:
    """Minimize the summed margin: pick the min(N_x, d) holders with largest h - g."""
    holders = sources_with_packets(x)
    k = min(len(holders), d)
    ranked = sorted(holders, key=lambda n: (x.g[n] - x.h[n], n))
    chosen = tuple(sorted(ranked[:k]))
    return PolicyDecision(Action(chosen), tuple(x.g[n] - x.h[n] for n in chosen))


def pi_decide(x: SystemState, d: int) -> PolicyDecision:
    """Pick the min(N_x, d) holders with the largest destination age."""
    holders = sources_with_packets(x)
    k = min(len(holders), d)
    ranked = sorted(holders, key=lambda n: (-x.h[n], n))
    chosen = tuple(sorted(ranked[:k]))
    return PolicyDecision(Action(chosen), tuple(x.h[n] for n in chosen))


def rr_decide(
    cursor: int, x: SystemState, d: int, strict: bool = False
) -> tuple[PolicyDecision, int]:
    """Cyclic selection starting at the cursor.

    Work-conserving (default): scan from the cursor, skipping empty buffers,
    until min(N_x, d) sources are chosen; the cursor lands one past the last
    pick.  Strict: take the next d indices regardless of buffer contents,
    schedule whichever of them hold packets, and advance the cursor by d.
    """
    n = len(x.g)
    if not 0 <= cursor < n:
        raise ValueError(f"cursor {cursor} outside [0, {n})")
    if strict:
        candidates = {(cursor + i) % n for i in range(min(d, n))}
        chosen = tuple(sorted(i for i in candidates if x.g[i] != EMPTY))
        return PolicyDecision(Action(chosen), None), (cursor + d) % n
    want = min(len(sources_with_packets(x)), d)
    picked: list[int] = []
    idx = cursor
    for _ in range(n):
        if len(picked) == want:
            break
        if x.g[idx] != EMPTY:
            picked.append(idx)
        idx = (idx + 1) % n
    new_cursor = (picked[-1] + 1) % n if picked else cursor
    return PolicyDecision(Action(tuple(sorted(picked))), None), new_cursor


def dp_policy_decide(table, t: int, x: SystemState) -> PolicyDecision:
    """Replay the stored minimizing action from a solved value table."""
    if t >= table.horizon:
        raise ValueError(f"stage {t} is terminal; no decision is defined")
    try:
        action = table.action(t, x)
    except KeyError:
        raise StateNotInTable(f"stage {t} has no entry for {x}") from None
    return PolicyDecision(action, None)


class Policy:
    """Deterministic decision rule; subclasses may thread a memory value
    (round-robin's cursor) through decide() so episodes stay replayable."""

    name = "policy"

    def initial_memory(self):
        return None

    def decide(self, t: int, x: SystemState, memory=None) -> tuple[PolicyDecision, object]:
        raise NotImplementedError


@dataclass(frozen=True)
class DeltaPolicy(Policy):
    d: int
    name = "delta"

    def decide(self, t, x, memory=None):
        return delta_decide(x, self.d), memory


@dataclass(frozen=True)
class PIPolicy(Policy):
    d: int
    name = "pi"

    def decide(self, t, x, memory=None):
        return pi_decide(x, self.d), memory


@dataclass(frozen=True)
class RRPolicy(Policy):
    n_sources: int
    d: int
    strict: bool = False

    @property
    def name(self):
        return "rr-strict" if self.strict else "rr"

    def initial_memory(self):
        return 0

    def decide(self, t, x, memory=None):
        cursor = 0 if memory is None else memory
        return rr_decide(cursor, x, self.d, strict=self.strict)


@dataclass(frozen=True)
class OptimalPolicy(Policy):
    table: object  # solved DPTable
    name = "optimal"

    def decide(self, t, x, memory=None):
        return dp_policy_decide(self.table, t, x), memory


POLICY_NAMES = ("delta", "pi", "rr", "rr-strict", "optimal")


def make_policy(
    name: str,
    params: ModelParams,
    *,
    table=None,
    rr_mode: str = "work-conserving",
) -> Policy:
    """Build a policy from its CLI name.  `optimal` needs a solved table; the
    rr_mode switch controls what plain `rr` means."""
    d = params.n_channels
    if name == "delta":
        return DeltaPolicy(d)
    if name == "pi":
        return PIPolicy(d)
    if name == "rr":
        return RRPolicy(params.n_sources, d, strict=(rr_mode == "strict"))
    if name == "rr-strict":
        return RRPolicy(params.n_sources, d, strict=True)
    if name == "optimal":
        if table is None:
            raise ValueError("optimal policy needs a solved value table")
        return OptimalPolicy(table)
    raise ValueError(f"unknown policy {name!r}; choose from {POLICY_NAMES}")
