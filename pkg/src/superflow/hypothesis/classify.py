"""Split a hypothesis into the parts a streaming monitor can check.

A hypothesis is monitorable when its top-level conjuncts all have one of
these shapes:

* ``forall f, g in F: ...`` whose conjuncts are unary constraints,
  equalities of the same attribute on both variables, the endpoint-pair
  disjunction (same or swapped src/dst), or time differences bounded above
  (which amount to a bound on max - min over the group);
* ``forall f in F: ...`` whose conjuncts are unary constraints or an
  existential witness ``P(f) implies exists g in F: Q(g) and <time bounds
  on attr(f) - attr(g)>``;
* ``count(distinct attr(x) [where unary]) >= c`` (or ``> c``).

Cardinality lower bounds become *qualifications*, checked when a group is
finalized; everything else is the *compatibility* formula used to grow
groups.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..flows import FlowRecord
from .ast import (
    GETTERS, And, AttrRef, Cardinality, Compare, Exists, Expr, Forall, InCidr, InSet, Not, Or, TimeDiff,
    conjoin, conjuncts, free_vars, has_quantifier,
)
from .evaluate import CMP, evaluate
from .parser import format_expr

FlowPredicate = Callable[[FlowRecord], bool]


@dataclass(frozen=True)
class Spread:
    """``max(hi_attr) - min(lo_attr) <= bound_ms`` over the group (``<`` if strict)."""
    hi_attr: str
    lo_attr: str
    bound_ms: int
    strict: bool = False

    def holds(self, hi_value: int, lo_value: int) -> bool:
        diff = hi_value - lo_value
        return diff < self.bound_ms if self.strict else diff <= self.bound_ms


@dataclass(frozen=True)
class Witness:
    """Every flow passing ``trigger`` needs a group member ``g`` passing ``candidate``
    with ``f_attr(f) - g_attr(g)`` inside [lo, hi] (open ends where strict)."""
    trigger: FlowPredicate
    candidate: FlowPredicate
    f_attr: str
    g_attr: str
    lo: float = -math.inf
    lo_strict: bool = False
    hi: float = math.inf
    hi_strict: bool = False

    def in_window(self, delta) -> bool:
        if delta < self.lo or (self.lo_strict and delta == self.lo):
            return False
        if delta > self.hi or (self.hi_strict and delta == self.hi):
            return False
        return True


@dataclass(frozen=True)
class Qualification:
    attr: str
    need: int
    filter: Optional[FlowPredicate]
    source: Cardinality


@dataclass
class MonitorPlan:
    unary: list = field(default_factory=list)        # FlowPredicate
    pairwise: list = field(default_factory=list)     # (a, b) -> bool, checked against the anchor
    key_parts: list = field(default_factory=list)    # attribute names or "pair"
    spreads: list = field(default_factory=list)
    witnesses: list = field(default_factory=list)
    qualifications: list = field(default_factory=list)

    def key(self, flow: FlowRecord) -> tuple:
        """Grouping key implied by the equality-family constraints."""
        out = []
        for part in self.key_parts:
            if part == "pair":
                a, b = flow.src_ip, flow.dst_ip
                out.append((a, b) if a <= b else (b, a))
            else:
                out.append(GETTERS[part](flow))
        return tuple(out)

    def accepts_alone(self, flow: FlowRecord) -> bool:
        return all(p(flow) for p in self.unary)


@dataclass(frozen=True)
class HypothesisClass:
    hypothesis: Expr = field(repr=False)
    monitorable: bool
    compatibility: Optional[Expr]
    qualification: tuple
    families: tuple = ()
    reasons: tuple = ()
    plan: Optional[MonitorPlan] = field(default=None, compare=False, repr=False)

    @property
    def subset_closed(self) -> bool:
        """False when witness constraints are present (removing a witness can break a group)."""
        return self.plan is not None and not self.plan.witnesses

    def compatible(self, flows) -> bool:
        return self.compatibility is None or evaluate(self.compatibility, flows)

    def qualified(self, flows) -> bool:
        return all(evaluate(q, flows) for q in self.qualification)


# -- compilation of quantifier-free formulas to closures --------------------

def _compile(node: Expr, slots: dict) -> Callable[[tuple], bool]:
    """Compile a quantifier-free formula; ``slots`` maps variable -> tuple position."""
    if isinstance(node, Compare):
        lget, li = GETTERS[node.left.attr], slots[node.left.var]
        op = CMP[node.op]
        if isinstance(node.right, AttrRef):
            rget, ri = GETTERS[node.right.attr], slots[node.right.var]
            return lambda fs: op(lget(fs[li]), rget(fs[ri]))
        const = node.right
        return lambda fs: op(lget(fs[li]), const)
    if isinstance(node, InCidr):
        get, i = GETTERS[node.ref.attr], slots[node.ref.var]
        mask, net = int(node.network.netmask), int(node.network.network_address)
        return lambda fs: (get(fs[i]) & mask) == net
    if isinstance(node, InSet):
        get, i = GETTERS[node.ref.attr], slots[node.ref.var]
        values = node.values
        return lambda fs: get(fs[i]) in values
    if isinstance(node, TimeDiff):
        lget, li = GETTERS[node.left.attr], slots[node.left.var]
        rget, ri = GETTERS[node.right.attr], slots[node.right.var]
        op, bound = CMP[node.op], node.bound_ms
        return lambda fs: op(lget(fs[li]) - rget(fs[ri]), bound)
    if isinstance(node, And):
        a, b = _compile(node.left, slots), _compile(node.right, slots)
        return lambda fs: a(fs) and b(fs)
    if isinstance(node, Or):
        a, b = _compile(node.left, slots), _compile(node.right, slots)
        return lambda fs: a(fs) or b(fs)
    if isinstance(node, Not):
        a = _compile(node.operand, slots)
        return lambda fs: not a(fs)
    raise TypeError(f"cannot compile {type(node).__name__}")


def compile_unary(node: Expr, var: str) -> FlowPredicate:
    fn = _compile(node, {var: 0})
    return lambda flow: fn((flow,))


def compile_binary(node: Expr, a: str, b: str) -> Callable[[FlowRecord, FlowRecord], bool]:
    fn = _compile(node, {a: 0, b: 1})
    return lambda x, y: fn((x, y))


# -- shape recognition -------------------------------------------------------

_ENDPOINT_PAIR = frozenset({
    frozenset({("srcip", "srcip"), ("dstip", "dstip")}),
    frozenset({("srcip", "dstip"), ("dstip", "srcip")}),
})

_FLIP = {"<=": ">=", "<": ">", ">=": "<=", ">": "<", "==": "==", "!=": "!="}


def _cross_equalities(node: Expr, x: str, y: str):
    """Return {(attr of x, attr of y)} if ``node`` is a conjunction of x/y equalities."""
    pairs = set()
    for c in conjuncts(node):
        if not (isinstance(c, Compare) and c.op == "==" and isinstance(c.right, AttrRef)):
            return None
        l, r = c.left, c.right
        if (l.var, r.var) == (x, y):
            pairs.add((l.attr, r.attr))
        elif (l.var, r.var) == (y, x):
            pairs.add((r.attr, l.attr))
        else:
            return None
    return frozenset(pairs)


def _is_endpoint_pair(node: Expr, x: str, y: str) -> bool:
    if not isinstance(node, Or):
        return False
    sides = {_cross_equalities(node.left, x, y), _cross_equalities(node.right, x, y)}
    return sides == _ENDPOINT_PAIR


class _Refusal(Exception):
    pass


class _Classifier:
    def __init__(self):
        self.plan = MonitorPlan()
        self.families: list[str] = []
        self.reasons: list[str] = []

    def family(self, name):
        if name not in self.families:
            self.families.append(name)

    def refuse(self, message):
        self.reasons.append(message)

    def clause(self, node: Expr):
        if isinstance(node, Forall) and len(node.vars) == 2:
            self.pairwise_clause(node)
        elif isinstance(node, Forall) and len(node.vars) == 1:
            self.single_clause(node)
        elif isinstance(node, Forall):
            self.refuse(f"quantifier over {len(node.vars)} variables")
        elif isinstance(node, Cardinality):
            self.refuse(f"cardinality bound '{node.op} {node.bound}' can be violated later in the stream")
        elif isinstance(node, Exists):
            self.refuse("top-level existential quantifier")
        else:
            self.refuse(f"unsupported top-level {type(node).__name__} clause")

    def unary(self, node: Expr, var: str):
        self.plan.unary.append(compile_unary(node, var))
        self.family("unary")

    def pairwise_clause(self, node: Forall):
        x, y = node.vars
        for c in conjuncts(node.body):
            fv = free_vars(c)
            if has_quantifier(c):
                self.refuse(f"nested quantifier inside pairwise clause: {format_expr(c)}")
            elif len(fv) <= 1:
                if not fv:
                    self.refuse(f"closed constant constraint: {format_expr(c)}")
                else:
                    self.unary(c, next(iter(fv)))
            elif (isinstance(c, Compare) and c.op == "==" and isinstance(c.right, AttrRef)
                  and c.left.attr == c.right.attr):
                self.plan.pairwise.append(compile_binary(c, x, y))
                if c.left.attr not in self.plan.key_parts:
                    self.plan.key_parts.append(c.left.attr)
                self.family("equality")
            elif _is_endpoint_pair(c, x, y):
                self.plan.pairwise.append(compile_binary(c, x, y))
                if "pair" not in self.plan.key_parts:
                    self.plan.key_parts.append("pair")
                self.family("endpoint-pair")
            elif isinstance(c, TimeDiff) and c.op in ("<=", "<", ">=", ">"):
                if c.op in ("<=", "<"):
                    spread = Spread(c.left.attr, c.right.attr, c.bound_ms, c.op == "<")
                else:
                    spread = Spread(c.right.attr, c.left.attr, -c.bound_ms, c.op == ">")
                self.plan.spreads.append(spread)
                self.family("time-spread")
            else:
                self.refuse(f"binary constraint outside the monitorable families: {format_expr(c)}")

    def single_clause(self, node: Forall):
        (x,) = node.vars
        for c in conjuncts(node.body):
            fv = free_vars(c)
            if not has_quantifier(c) and fv == {x}:
                self.unary(c, x)
                continue
            try:
                self.plan.witnesses.append(self.witness(c, x))
                self.family("witness")
            except _Refusal as exc:
                self.refuse(str(exc))

    def witness(self, node: Expr, x: str) -> Witness:
        if isinstance(node, Exists):
            trigger_expr, exists = None, node
        elif isinstance(node, Or) and isinstance(node.right, Exists):
            trigger_expr, exists = node.left, node.right
        elif isinstance(node, Or) and isinstance(node.left, Exists):
            trigger_expr, exists = node.right, node.left
        else:
            raise _Refusal(f"unsupported constraint shape: {format_expr(node)}")
        if trigger_expr is not None and (has_quantifier(trigger_expr) or free_vars(trigger_expr) != {x}):
            raise _Refusal(f"witness condition must be unary in {x}: {format_expr(trigger_expr)}")
        if len(exists.vars) != 1:
            raise _Refusal("witness quantifier must bind one variable")
        (y,) = exists.vars

        candidate_parts = []
        attrs = None
        lo, lo_strict, hi, hi_strict = -math.inf, False, math.inf, False
        for c in conjuncts(exists.body):
            fv = free_vars(c)
            if has_quantifier(c):
                raise _Refusal(f"nested quantifier in witness: {format_expr(c)}")
            if fv == {y}:
                candidate_parts.append(c)
                continue
            if not (isinstance(c, TimeDiff) and fv == {x, y}):
                raise _Refusal(f"witness constraint must be unary in {y} or a time difference: {format_expr(c)}")
            if c.left.var == x:
                pair, op, bound = (c.left.attr, c.right.attr), c.op, c.bound_ms
            else:
                pair, op, bound = (c.right.attr, c.left.attr), _FLIP[c.op], -c.bound_ms
            if attrs is not None and pair != attrs:
                raise _Refusal("witness time bounds must all relate the same attributes")
            attrs = pair
            if op in ("<=", "<"):
                if bound < hi or (bound == hi and op == "<"):
                    hi, hi_strict = bound, op == "<"
            elif op in (">=", ">"):
                if bound > lo or (bound == lo and op == ">"):
                    lo, lo_strict = bound, op == ">"
            elif op == "==":
                lo, hi = max(lo, bound), min(hi, bound)
            else:
                raise _Refusal("'!=' time bound in witness")

        if trigger_expr is None:
            trigger = lambda flow: True
        else:
            inner = compile_unary(trigger_expr, x)
            trigger = lambda flow: not inner(flow)
        candidate = compile_unary(conjoin(*candidate_parts), y) if candidate_parts else (lambda flow: True)
        f_attr, g_attr = attrs or ("tstart", "tstart")
        return Witness(trigger, candidate, f_attr, g_attr, lo, lo_strict, hi, hi_strict)


def classify(h: Expr) -> HypothesisClass:
    """Decide whether ``h`` can be monitored in one pass and split off its qualifications."""
    clauses = conjuncts(h)
    qualifications = []
    rest = []
    for c in clauses:
        if isinstance(c, Cardinality) and c.op in (">=", ">"):
            qualifications.append(c)
        else:
            rest.append(c)
    compatibility = conjoin(*rest) if rest else None

    cl = _Classifier()
    for c in rest:
        cl.clause(c)
    for q in qualifications:
        flt = None
        if q.filter is not None:
            if has_quantifier(q.filter) or not free_vars(q.filter) <= {q.var}:
                cl.refuse(f"count filter must be unary: {format_expr(q.filter)}")
                continue
            flt = compile_unary(q.filter, q.var)
        need = q.bound if q.op == ">=" else q.bound + 1
        cl.plan.qualifications.append(Qualification(q.attr, need, flt, q))
        cl.family("distinct-count")

    monitorable = not cl.reasons
    return HypothesisClass(
        hypothesis=h,
        monitorable=monitorable,
        compatibility=compatibility,
        qualification=tuple(qualifications),
        families=tuple(cl.families),
        reasons=tuple(cl.reasons),
        plan=cl.plan if monitorable else None,
    )
