"""Bounded-memory streaming check of one candidate superflow.

Per offered flow the monitor does a constant amount of work: unary checks,
the equality-family constraints against the first accepted flow (the
anchor), running min/max for time spreads, and a capped distinct-value set
per qualification. Witness constraints keep a sorted buffer of candidate
timestamps, bounded by ``witness_capacity``.
"""

from __future__ import annotations

import enum
from bisect import bisect_left, insort

from .errors import UnsupportedHypothesisError
from .flows import FlowRecord
from .hypothesis.ast import GETTERS
from .hypothesis.classify import HypothesisClass, MonitorPlan

DEFAULT_WITNESS_CAPACITY = 4096


class Offer(enum.Enum):
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    WITNESS_EXHAUSTED = "witness-buffer exhausted"

    def __bool__(self):
        return self is Offer.ACCEPTED


class MonitorState:
    __slots__ = ("plan", "anchor", "spread_bounds", "distinct", "reached",
                 "accepted_count", "witness_values", "witness_reach", "witness_capacity")

    def __init__(self, plan: MonitorPlan, witness_capacity: int = DEFAULT_WITNESS_CAPACITY):
        self.plan = plan
        self.anchor: FlowRecord | None = None
        # per spread: [max of hi attribute, min of lo attribute]
        self.spread_bounds = [None] * len(plan.spreads)
        self.distinct = [set() for _ in plan.qualifications]
        self.reached = [q.need <= 0 for q in plan.qualifications]
        for i, done in enumerate(self.reached):
            if done:
                self.distinct[i] = None
        self.accepted_count = 0
        self.witness_values = [[] for _ in plan.witnesses]
        # per witness: largest f-side attribute value among accepted flows
        self.witness_reach = [None] * len(plan.witnesses)
        self.witness_capacity = witness_capacity

    @property
    def qualified(self) -> bool:
        return all(self.reached)

    def retained_values(self) -> int:
        """Number of flow-derived values held in memory (for the memory-bound check)."""
        total = 1 if self.anchor is not None else 0
        total += 2 * sum(b is not None for b in self.spread_bounds)
        total += sum(len(s) for s in self.distinct if s is not None)
        total += sum(len(v) for v in self.witness_values)
        return total

    def snapshot(self):
        return (
            self.anchor, tuple(map(tuple, (b or () for b in self.spread_bounds))),
            tuple(frozenset(s) if s is not None else None for s in self.distinct),
            tuple(self.reached), self.accepted_count,
            tuple(tuple(v) for v in self.witness_values), tuple(self.witness_reach),
        )

    def check(self, f: FlowRecord):
        """Work out whether ``f`` may join; return ``(Offer, pending update)`` without mutating."""
        plan = self.plan
        for p in plan.unary:
            if not p(f):
                return Offer.REJECTED, None
        anchor = self.anchor
        if anchor is not None:
            for p in plan.pairwise:
                if not p(anchor, f):
                    return Offer.REJECTED, None

        new_bounds = []
        for spread, cur in zip(plan.spreads, self.spread_bounds):
            hi = GETTERS[spread.hi_attr](f)
            lo = GETTERS[spread.lo_attr](f)
            if cur is not None:
                hi = max(hi, cur[0])
                lo = min(lo, cur[1])
            if not spread.holds(hi, lo):
                return Offer.REJECTED, None
            new_bounds.append((hi, lo))

        new_rings = []
        for i, w in enumerate(plan.witnesses):
            a = GETTERS[w.f_attr](f)
            ring = self.witness_values[i]
            if w.trigger(f):
                found = w.candidate(f) and w.in_window(a - GETTERS[w.g_attr](f))
                if not found:
                    # ring values v with a - v inside the window
                    j = bisect_left(ring, a - w.hi)
                    while j < len(ring):
                        v = ring[j]
                        delta = a - v
                        if delta < w.lo or (w.lo_strict and delta == w.lo):
                            break
                        if w.in_window(delta):
                            found = True
                            break
                        j += 1
                if not found:
                    return Offer.REJECTED, None
            reach = self.witness_reach[i]
            reach = a if reach is None else max(reach, a)
            if w.candidate(f):
                b = GETTERS[w.g_attr](f)
                j = bisect_left(ring, b)
                if j == len(ring) or ring[j] != b:
                    ring = list(ring)
                    ring.insert(j, b)
                    if len(ring) > self.witness_capacity:
                        # values no future flow at or after ``reach`` can use
                        floor = reach - w.hi
                        ring = [v for v in ring if v >= floor]
                        if len(ring) > self.witness_capacity:
                            return Offer.WITNESS_EXHAUSTED, None
            new_rings.append((ring, reach))

        return Offer.ACCEPTED, (new_bounds, new_rings)

    def commit(self, f: FlowRecord, pending) -> None:
        new_bounds, new_rings = pending
        if self.anchor is None:
            self.anchor = f
        self.spread_bounds = new_bounds
        for i, (ring, reach) in enumerate(new_rings):
            self.witness_values[i] = ring
            self.witness_reach[i] = reach
        for i, q in enumerate(self.plan.qualifications):
            if self.reached[i]:
                continue
            if q.filter is None or q.filter(f):
                seen = self.distinct[i]
                seen.add(GETTERS[q.attr](f))
                if len(seen) >= q.need:
                    self.reached[i] = True
                    self.distinct[i] = None
        self.accepted_count += 1

    def offer(self, f: FlowRecord) -> Offer:
        outcome, pending = self.check(f)
        if outcome is Offer.ACCEPTED:
            self.commit(f, pending)
        return outcome


def monitor_new(cls: HypothesisClass, witness_capacity: int = DEFAULT_WITNESS_CAPACITY) -> MonitorState:
    if not cls.monitorable:
        raise UnsupportedHypothesisError(
            "hypothesis cannot be monitored in one pass: " + "; ".join(cls.reasons))
    return MonitorState(cls.plan, witness_capacity)


def monitor_offer(state: MonitorState, f: FlowRecord) -> Offer:
    return state.offer(f)


def monitor_qualified(state: MonitorState) -> bool:
    return state.qualified
