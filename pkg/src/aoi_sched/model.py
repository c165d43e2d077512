"""Core system model: states, actions, random events, and the slot transition law.

N sources each hold at most one buffered update packet; up to d orthogonal
channels carry packets to a monitor.  Two age vectors describe the system at
the start of a slot: g[n] is the age of the packet sitting in source n's
buffer (EMPTY if the buffer holds nothing) and h[n] is the age of the last
update delivered from source n.  A buffered packet is always strictly
fresher than what the monitor has, so g[n] = EMPTY or g[n] < h[n].

Within a slot: scheduled transfers each succeed independently with
probability p, and each source independently receives a fresh packet with
probability q[n] (overwriting its buffer).  On success the monitor's age
resets to the delivered packet's age plus one; otherwise it grows by one.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, NamedTuple

EMPTY = -1  # sentinel age: source buffer holds no packet ("psi" in file I/O)


class InvalidState(ValueError):
    """State vectors violate the buffer-freshness invariant or are malformed."""


class InvalidEvent(ValueError):
    """Transition event inconsistent with the action it claims to resolve."""


class SystemState(NamedTuple):
    g: tuple[int, ...]  # buffered-packet age per source, EMPTY if no packet
    h: tuple[int, ...]  # destination age per source


class Action(NamedTuple):
    scheduled: tuple[int, ...]  # strictly increasing source indices


class TransitionEvent(NamedTuple):
    successes: tuple[int, ...]  # scheduled sources whose transfer got through
    arrivals: tuple[int, ...]   # sources that received a fresh packet


class SuccessProbs(NamedTuple):
    batch: float          # chance at least one of d parallel attempts succeeds
    batch_over_p: float   # polynomial equal to batch/p, finite at p=0
    attempted: float      # same for the n_attempts actually made


@dataclass(frozen=True)
class ModelParams:
    """Instance parameters: N sources, d channels, success prob p, arrival probs q, horizon T."""

    n_sources: int
    n_channels: int
    p: float
    q: tuple[float, ...]
    horizon: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "q", tuple(float(v) for v in self.q))
        if self.n_sources < 1:
            raise ValueError(f"n_sources must be >= 1, got {self.n_sources}")
        if self.n_channels < 1:
            raise ValueError(f"n_channels must be >= 1, got {self.n_channels}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0,1], got {self.p}")
        if len(self.q) != self.n_sources:
            raise ValueError(f"q has length {len(self.q)}, expected {self.n_sources}")
        if any(not 0.0 <= v <= 1.0 for v in self.q):
            raise ValueError(f"every q entry must lie in [0,1], got {self.q}")


def new_state(g: Iterable[int], h: Iterable[int]) -> SystemState:
    """Validated state constructor; use it at every boundary that accepts raw vectors."""
    gt = tuple(int(v) for v in g)
    ht = tuple(int(v) for v in h)
    if len(gt) != len(ht):
        raise InvalidState(f"g has length {len(gt)} but h has length {len(ht)}")
    if not gt:
        raise InvalidState("state needs at least one source")
    for n, (gn, hn) in enumerate(zip(gt, ht)):
        if hn < 0:
            raise InvalidState(f"h[{n}] = {hn} is negative")
        if gn != EMPTY and not 0 <= gn < hn:
            raise InvalidState(f"g[{n}] = {gn} must be EMPTY or in [0, h[{n}]) = [0, {hn})")
    return SystemState(gt, ht)


def fresh_state(n_sources: int) -> SystemState:
    """Default initial condition: every buffer holds an age-0 packet and every
    destination is one slot stale."""
    return new_state((0,) * n_sources, (1,) * n_sources)


def sources_with_packets(x: SystemState) -> tuple[int, ...]:
    """Indices holding a buffered packet, ascending."""
    return tuple(n for n, gn in enumerate(x.g) if gn != EMPTY)


def enumerate_actions(x: SystemState, d: int) -> list[Action]:
    """All work-conserving actions: every size-min(N_x, d) subset of the packet holders.

    With no packets anywhere the only action is the empty one; with at most d
    holders there is exactly one action (schedule them all).
    """
    holders = sources_with_packets(x)
    k = min(len(holders), d)
    return [Action(c) for c in combinations(holders, k)]


def cost(x: SystemState) -> int:
    """Per-slot cost: the summed destination ages.  Action-independent."""
    return sum(x.h)


def norm_inf(x: SystemState) -> int:
    """One plus the largest destination age; the size measure used by gap bounds."""
    return max(x.h) + 1


# Fault injection for negative-control verification (`verify --inject-fault`).
# "age-drift": non-delivered destination ages advance by 2 instead of 1, which
# breaks the one-step expected-age identity.  "drop-event": the transition
# enumeration silently omits one event, which breaks probability closure.
_FAULT_MODES = (None, "age-drift", "drop-event")
_fault_mode: str | None = None


def set_fault_mode(mode: str | None) -> None:
    global _fault_mode
    if mode not in _FAULT_MODES:
        raise ValueError(f"unknown fault mode {mode!r}; choose from {_FAULT_MODES}")
    _fault_mode = mode


def apply_transition(x: SystemState, a: Action, e: TransitionEvent) -> SystemState:
    """Resolve one slot: successes reset destination ages, arrivals refill buffers.

    Destination: h'[n] = g[n]+1 on a successful transfer from n, else h[n]+1.
    Buffer: an arrival leaves a fresh age-0 packet; a delivered packet without
    an arrival empties the buffer; an undelivered packet ages by one; an empty
    buffer stays empty.
    """
    w = frozenset(e.successes)
    if not w.issubset(a.scheduled):
        raise InvalidEvent(f"successes {sorted(w)} not within scheduled {list(a.scheduled)}")
    for n in a.scheduled:
        if x.g[n] == EMPTY:
            raise InvalidState(f"action schedules source {n} whose buffer is empty")
    c = frozenset(e.arrivals)
    bump = 2 if _fault_mode == "age-drift" else 1
    g2 = []
    h2 = []
    for n, (gn, hn) in enumerate(zip(x.g, x.h)):
        delivered = n in w
        h2.append(gn + 1 if delivered else hn + bump)
        if n in c:
            g2.append(0)
        elif delivered or gn == EMPTY:
            g2.append(EMPTY)
        else:
            g2.append(gn + 1)
    return SystemState(tuple(g2), tuple(h2))


def transition_prob(a: Action, e: TransitionEvent, params: ModelParams) -> float:
    """Joint probability of a (successes, arrivals) event under independent draws."""
    w = frozenset(e.successes)
    if not w.issubset(a.scheduled):
        raise InvalidEvent(f"successes {sorted(w)} not within scheduled {list(a.scheduled)}")
    c = frozenset(e.arrivals)
    p = params.p
    pr = p ** len(w) * (1.0 - p) ** (len(a.scheduled) - len(w))
    for n, qn in enumerate(params.q):
        pr *= qn if n in c else 1.0 - qn
    return pr


def enumerate_transitions(
    x: SystemState, a: Action, params: ModelParams
) -> list[tuple[SystemState, float]]:
    """Exhaustive successor distribution for (x, a), duplicate states merged.

    Iterates every (successes, arrivals) pair, skipping zero-probability
    events, so the returned support is exact and sums to one.
    """
    merged: dict[SystemState, float] = {}
    events = []
    all_sources = tuple(range(params.n_sources))
    for nw in range(len(a.scheduled) + 1):
        for w in combinations(a.scheduled, nw):
            for nc in range(params.n_sources + 1):
                for c in combinations(all_sources, nc):
                    events.append(TransitionEvent(w, c))
    if _fault_mode == "drop-event" and len(events) > 1:
        events.pop()
    for e in events:
        pr = transition_prob(a, e, params)
        if pr == 0.0:
            continue
        x2 = apply_transition(x, a, e)
        merged[x2] = merged.get(x2, 0.0) + pr
    return list(merged.items())


def sample_step(
    x: SystemState, a: Action, params: ModelParams, rng
) -> tuple[SystemState, TransitionEvent]:
    """Draw one slot outcome.  Consumes len(scheduled) success uniforms (ascending
    source index) then n_sources arrival uniforms (ascending index), so episode
    streams are replayable byte-for-byte from the seed."""
    succ_u = rng.random(len(a.scheduled))
    arr_u = rng.random(params.n_sources)
    successes = tuple(n for i, n in enumerate(a.scheduled) if succ_u[i] < params.p)
    arrivals = tuple(n for n in range(params.n_sources) if arr_u[n] < params.q[n])
    e = TransitionEvent(successes, arrivals)
    return apply_transition(x, a, e), e


def success_probs(params: ModelParams, n_attempts: int) -> SuccessProbs:
    """At-least-one-success probabilities for the full channel batch and for
    the attempts actually made, plus the polynomial factor batch/p."""
    p, d = params.p, params.n_channels
    if not 0 <= n_attempts <= d:
        raise ValueError(f"n_attempts must lie in [0, {d}], got {n_attempts}")
    batch = 1.0 - (1.0 - p) ** d
    over_p = math.fsum((-1.0) ** l * math.comb(d, l + 1) * p**l for l in range(d))
    attempted = 1.0 - (1.0 - p) ** n_attempts
    return SuccessProbs(batch, over_p, attempted)


_STATE_RE = re.compile(r"^g=\[([^\]]*)\];h=\[([^\]]*)\]$")


def format_state(x: SystemState) -> str:
    """Render as `g=[psi,0,3];h=[7,1,5]` with `psi` marking empty buffers."""
    gs = ",".join("psi" if v == EMPTY else str(v) for v in x.g)
    hs = ",".join(str(v) for v in x.h)
    return f"g=[{gs}];h=[{hs}]"


def parse_state(text: str) -> SystemState:
    """Inverse of format_state; whitespace around commas is tolerated."""
    m = _STATE_RE.match(text.replace(" ", ""))
    if m is None:
        raise InvalidState(f"cannot parse state {text!r}; expected g=[...];h=[...]")
    g = [EMPTY if tok == "psi" else _parse_age(tok, text) for tok in m.group(1).split(",") if tok]
    h = [_parse_age(tok, text) for tok in m.group(2).split(",") if tok]
    return new_state(g, h)


def _parse_age(tok: str, text: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise InvalidState(f"bad age token {tok!r} in state {text!r}") from None
