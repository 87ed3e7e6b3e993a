"""Greedy single-pass superflow decomposition, plus desk-scale oracles.

``decompose`` streams flows once, offering each to the open candidates that
share its grouping key. At end of stream qualified candidates become
superflows and the rest dissolve into the residual set. A finalization
repair then restores maximality, which the plain greedy pass loses once a
hypothesis carries a cardinality lower bound: residual flows that extend a
superflow are absorbed, and qualifying windows hidden in the residual set
are emitted as new superflows.

``verify_maximal`` and ``brute_force_decompose`` enumerate subsets and set
partitions; they exist to check ``decompose`` on small inputs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, TextIO, Union

from .errors import DecompositionSizeError, SuperflowError, UnsupportedHypothesisError
from .flows import FlowRecord
from .hypothesis.ast import GETTERS, Expr
from .hypothesis.classify import HypothesisClass, classify
from .hypothesis.evaluate import evaluate
from .monitor import DEFAULT_WITNESS_CAPACITY, MonitorState, Offer
from .summaries import SUMMARIZERS

POLICIES = ("first-match", "best-match")


@dataclass
class Superflow:
    hypothesis_id: str
    member_indices: tuple
    summary: object = None

    def __len__(self):
        return len(self.member_indices)


@dataclass
class Decomposition:
    superflows: list
    rest_indices: tuple
    n: int
    hypothesis_id: str = "h"
    stats: dict = field(default_factory=dict)

    def parts(self) -> list[tuple]:
        return [sf.member_indices for sf in self.superflows]

    def check_partition(self) -> None:
        seen = []
        for sf in self.superflows:
            if not sf.member_indices:
                raise AssertionError("empty superflow")
            if list(sf.member_indices) != sorted(set(sf.member_indices)):
                raise AssertionError("member indices not strictly increasing")
            seen.extend(sf.member_indices)
        seen.extend(self.rest_indices)
        if sorted(seen) != list(range(self.n)):
            raise AssertionError("superflows and rest do not partition the input")


def infer_summary_kind(cls: HypothesisClass) -> str:
    plan = cls.plan
    if plan is None:
        return "generic"
    if plan.witnesses:
        return "web"
    if "pair" in plan.key_parts:
        return "chat"
    if "srcip" in plan.key_parts and any(q.attr == "dstip" for q in plan.qualifications):
        return "scan"
    return "generic"


def _as_class(h: Union[Expr, HypothesisClass]) -> HypothesisClass:
    return h if isinstance(h, HypothesisClass) else classify(h)


class _Candidate:
    __slots__ = ("monitor", "members")

    def __init__(self, monitor: MonitorState, first: int):
        self.monitor = monitor
        self.members = [first]


def decompose(
    stream: Iterable[FlowRecord],
    h: Union[Expr, HypothesisClass],
    policy: str = "first-match",
    hypothesis_id: str = "h",
    summary_kind: Optional[str] = None,
    repair: bool = True,
    witness_capacity: int = DEFAULT_WITNESS_CAPACITY,
) -> Decomposition:
    """Partition a flow stream into superflows satisfying ``h`` and a residual set."""
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    cls = _as_class(h)
    if not cls.monitorable:
        raise UnsupportedHypothesisError(
            "hypothesis is not efficiently monitorable (" + "; ".join(cls.reasons)
            + "); use brute_force_decompose for small inputs")
    plan = cls.plan
    key = plan.key
    best = policy == "best-match"

    flows: list[FlowRecord] = []
    candidates: list[_Candidate] = []
    buckets: dict[tuple, list[_Candidate]] = {}
    rest: list[int] = []
    checks = 0

    for i, f in enumerate(stream):
        flows.append(f)
        bucket = buckets.get(key(f))
        chosen = None
        if bucket:
            for cand in bucket:
                checks += 1
                outcome, pending = cand.monitor.check(f)
                if outcome is not Offer.ACCEPTED:
                    continue
                if not best:
                    chosen = (cand, pending)
                    break
                if chosen is None or cand.monitor.accepted_count > chosen[0].monitor.accepted_count:
                    chosen = (cand, pending)
        if chosen is not None:
            cand, pending = chosen
            cand.monitor.commit(f, pending)
            cand.members.append(i)
            continue
        monitor = MonitorState(plan, witness_capacity)
        checks += 1
        if monitor.offer(f) is Offer.ACCEPTED:
            cand = _Candidate(monitor, i)
            candidates.append(cand)
            buckets.setdefault(key(f), []).append(cand)
        else:
            rest.append(i)

    groups = []
    for cand in candidates:
        if cand.monitor.qualified:
            groups.append(cand)
        else:
            rest.extend(cand.members)

    stats = {
        "flows": len(flows),
        "candidates": len(candidates),
        "monitor_checks": checks,
        "repair_checks": 0,
        "repaired_superflows": 0,
        "absorbed_flows": 0,
    }
    rest_set = set(rest)
    if repair and rest_set:
        _repair(flows, plan, groups, rest_set, stats, witness_capacity)

    kind = summary_kind or infer_summary_kind(cls)
    summarize = SUMMARIZERS[kind]
    superflows = []
    for cand in sorted(groups, key=lambda c: min(c.members)):
        members = tuple(sorted(cand.members))
        superflows.append(Superflow(hypothesis_id, members, summarize([flows[j] for j in members])))
    stats["summary_kind"] = kind
    return Decomposition(superflows, tuple(sorted(rest_set)), len(flows), hypothesis_id, stats)


def _repair(flows, plan, groups, rest: set, stats, witness_capacity):
    """Absorb residual flows into superflows and carve qualifying groups out of the residue."""
    key = plan.key
    by_key: dict[tuple, list[_Candidate]] = {}
    for g in groups:
        by_key.setdefault(key(flows[g.members[0]]), []).append(g)

    lo_attrs = {s.lo_attr for s in plan.spreads}
    anchor_attr = next(iter(lo_attrs)) if len(lo_attrs) == 1 else None
    # with a single time attribute on both sides the anchored window is bounded above too
    window = None
    if anchor_attr and all(s.hi_attr == anchor_attr for s in plan.spreads):
        window = min(s.bound_ms for s in plan.spreads)

    while True:
        # extend existing superflows until nothing more fits
        absorbed = True
        while absorbed and rest:
            absorbed = False
            for i in sorted(rest):
                f = flows[i]
                for g in by_key.get(key(f), ()):
                    stats["repair_checks"] += 1
                    if g.monitor.offer(f) is Offer.ACCEPTED:
                        g.members.append(i)
                        rest.discard(i)
                        stats["absorbed_flows"] += 1
                        absorbed = True
                        break

        found = _find_group(flows, plan, rest, anchor_attr, window, stats, witness_capacity)
        if found is None:
            return
        rest.difference_update(found.members)
        groups.append(found)
        by_key.setdefault(key(flows[found.members[0]]), []).append(found)
        stats["repaired_superflows"] += 1


def _find_group(flows, plan, rest, anchor_attr, window, stats, witness_capacity):
    buckets: dict[tuple, list[int]] = {}
    for i in sorted(rest):
        if plan.accepts_alone(flows[i]):
            buckets.setdefault(plan.key(flows[i]), []).append(i)

    for members in buckets.values():
        if not _could_qualify(flows, plan, members):
            continue
        if anchor_attr is None:
            order = members
            # with no time spread the whole bucket is compatible, so one anchor decides
            anchors = members if plan.spreads or plan.witnesses else members[:1]
        else:
            get = GETTERS[anchor_attr]
            order = sorted(members, key=lambda j: (get(flows[j]), j))
            anchors = order
        for a_pos, a in enumerate(anchors):
            monitor = MonitorState(plan, witness_capacity)
            stats["repair_checks"] += 1
            if monitor.offer(flows[a]) is not Offer.ACCEPTED:
                continue
            if anchor_attr is None:
                pool = [j for j in members if j != a]
            else:
                a_val = get(flows[a])
                pool = []
                for j in order[a_pos + 1:]:
                    if window is not None and get(flows[j]) > a_val + window:
                        break
                    pool.append(j)
                # equal anchor values may sort before the anchor
                pool.extend(j for j in order[:a_pos] if get(flows[j]) == a_val)
                pool.sort()
            taken = [a]
            progress = True
            while progress and pool:
                progress = False
                left = []
                for j in pool:
                    stats["repair_checks"] += 1
                    if monitor.offer(flows[j]) is Offer.ACCEPTED:
                        taken.append(j)
                        progress = True
                    else:
                        left.append(j)
                pool = left
            if monitor.qualified:
                cand = _Candidate(monitor, a)
                cand.members = taken
                return cand
    return None


def _could_qualify(flows, plan, members) -> bool:
    for q in plan.qualifications:
        get = GETTERS[q.attr]
        values = {get(flows[j]) for j in members if q.filter is None or q.filter(flows[j])}
        if len(values) < q.need:
            return False
    return True


# -- decomposition file --------------------------------------------------------

def _fmt_indices(indices) -> str:
    return ",".join(map(str, indices)) if indices else "-"


def format_decomposition(d: Decomposition) -> str:
    lines = [f"SF {n} {sf.hypothesis_id} {len(sf.member_indices)} {_fmt_indices(sf.member_indices)}"
             for n, sf in enumerate(d.superflows)]
    lines.append(f"REST {len(d.rest_indices)} {_fmt_indices(d.rest_indices)}")
    return "\n".join(lines) + "\n"


def write_decomposition(d: Decomposition, out: TextIO) -> None:
    out.write(format_decomposition(d))


def parse_decomposition(text: str, n: Optional[int] = None) -> Decomposition:
    superflows = []
    rest = None
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        try:
            if parts[0] == "SF" and len(parts) == 5:
                count, indices = int(parts[3]), _parse_indices(parts[4])
                hyp_id = parts[2]
                superflows.append(Superflow(hyp_id, indices))
            elif parts[0] == "REST" and len(parts) == 3:
                count, indices = int(parts[1]), _parse_indices(parts[2])
                rest = indices
            else:
                raise ValueError("unrecognized line")
        except ValueError as exc:
            raise SuperflowError(f"decomposition line {line_no}: {exc}") from None
        if count != len(indices):
            raise SuperflowError(f"decomposition line {line_no}: count {count} != {len(indices)} indices")
    if rest is None:
        raise SuperflowError("decomposition has no REST line")
    total = sum(len(sf.member_indices) for sf in superflows) + len(rest)
    hyp_id = superflows[0].hypothesis_id if superflows else "h"
    return Decomposition(superflows, rest, n if n is not None else total, hyp_id)


def _parse_indices(field_text: str) -> tuple:
    if field_text == "-":
        return ()
    return tuple(int(x) for x in field_text.split(","))


def attach_summaries(d: Decomposition, flows: Sequence[FlowRecord], kind: str) -> None:
    summarize = SUMMARIZERS[kind]
    for sf in d.superflows:
        sf.summary = summarize([flows[i] for i in sf.member_indices])


# -- desk-scale oracles --------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    condition: str               # "a": a residual subset satisfies h; "b": a superflow extends
    superflow: Optional[int]
    subset: tuple


@dataclass
class MaximalityReport:
    violations: list
    partial: bool = False
    subsets_checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def _nonempty_subsets(items, sampling):
    if sampling:
        yield from itertools.combinations(items, 1)
        yield from itertools.combinations(items, 2)
        if len(items) > 2:
            yield tuple(items)
    else:
        for size in range(1, len(items) + 1):
            yield from itertools.combinations(items, size)


def verify_maximal(d: Decomposition, flows: Sequence[FlowRecord], h: Expr,
                   limit: int = 20, sampling: bool = False) -> MaximalityReport:
    """List violations of the two maximality conditions.

    Exact checking enumerates every nonempty subset of the residual set, so
    it refuses residual sets larger than ``limit`` unless ``sampling`` is set;
    sampling checks singletons, pairs and the whole residual set, and the
    report is marked partial.
    """
    if isinstance(h, HypothesisClass):
        h = h.hypothesis
    rest = list(d.rest_indices)
    if len(rest) > limit and not sampling:
        raise DecompositionSizeError(
            f"{len(rest)} residual flows exceed the exact-check limit of {limit}; "
            "pass sampling=True for a partial check")
    report = MaximalityReport([], partial=sampling)
    parts = [[flows[i] for i in sf.member_indices] for sf in d.superflows]
    for subset in _nonempty_subsets(rest, sampling):
        chosen = [flows[i] for i in subset]
        report.subsets_checked += 1
        if evaluate(h, chosen):
            report.violations.append(Violation("a", None, subset))
        for n, members in enumerate(parts):
            if evaluate(h, members + chosen):
                report.violations.append(Violation("b", n, subset))
    return report


def _set_partitions(mask: int, valid: list):
    """Yield partitions of ``mask`` (bitmask) into blocks that are valid."""
    if mask == 0:
        yield []
        return
    low = mask & -mask
    others = mask ^ low
    sub = others
    while True:
        block = sub | low
        if valid[block]:
            for tail in _set_partitions(mask ^ block, valid):
                yield [block] + tail
        if sub == 0:
            break
        sub = (sub - 1) & others


def brute_force_decompose(flows: Sequence[FlowRecord], h: Expr, limit: int = 10,
                          hypothesis_id: str = "h") -> Decomposition:
    """Exhaustive maximal decomposition with the smallest residual set.

    Ties are broken by the lexicographically smallest part assignment, where
    each flow is labelled 0 if residual and otherwise by the 1-based rank of
    its superflow (superflows ordered by their smallest member).
    """
    if isinstance(h, HypothesisClass):
        h = h.hypothesis
    flows = list(flows)
    n = len(flows)
    if n > limit:
        raise DecompositionSizeError(f"brute force is limited to {limit} flows, got {n}")
    full = (1 << n) - 1

    def members(mask):
        return [flows[i] for i in range(n) if mask >> i & 1]

    valid = [False] * (1 << n)
    for mask in range(1, 1 << n):
        valid[mask] = evaluate(h, members(mask))

    # any_valid[m]: some nonempty submask of m satisfies h
    any_valid = [False] * (1 << n)
    for mask in range(1, 1 << n):
        if valid[mask]:
            any_valid[mask] = True
        else:
            m = mask
            while m:
                low = m & -m
                if any_valid[mask ^ low]:
                    any_valid[mask] = True
                    break
                m ^= low

    def extendable(block, rest_mask):
        sub = rest_mask
        while sub:
            if valid[block | sub]:
                return True
            sub = (sub - 1) & rest_mask
        return False

    by_size = sorted(range(1 << n), key=lambda m: (bin(m).count("1"), m))
    best = None
    best_size = None
    for rest_mask in by_size:
        size = bin(rest_mask).count("1")
        if best_size is not None and size > best_size:
            break
        if any_valid[rest_mask]:
            continue
        for blocks in _set_partitions(full ^ rest_mask, valid):
            if any(extendable(b, rest_mask) for b in blocks):
                continue
            blocks = sorted(blocks, key=lambda b: b & -b)
            labels = [0] * n
            for rank, b in enumerate(blocks, start=1):
                for i in range(n):
                    if b >> i & 1:
                        labels[i] = rank
            if best is None or labels < best[0]:
                best = (labels, blocks, rest_mask)
                best_size = size
    if best is None:
        raise SuperflowError("no maximal decomposition exists for this input")

    _, blocks, rest_mask = best
    superflows = [Superflow(hypothesis_id, tuple(i for i in range(n) if b >> i & 1)) for b in blocks]
    rest = tuple(i for i in range(n) if rest_mask >> i & 1)
    return Decomposition(superflows, rest, n, hypothesis_id)
