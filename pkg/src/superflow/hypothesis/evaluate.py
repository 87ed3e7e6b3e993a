"""Reference semantics: direct expansion of quantifiers over a finite flow set.

Nested loops, no cleverness. This is the oracle the streaming monitor and
the decomposer are checked against; keep it obviously correct.
"""

from __future__ import annotations

import itertools
import operator
from typing import Mapping, Sequence

from ..flows import FlowRecord
from .ast import (
    GETTERS, And, AttrRef, Cardinality, Compare, Exists, Expr, Forall, InCidr, InSet, Not, Or, TimeDiff,
)

CMP = {
    "==": operator.eq,
    "!=": operator.ne,
    "<=": operator.le,
    ">=": operator.ge,
    "<": operator.lt,
    ">": operator.gt,
}


def attr_value(ref: AttrRef, env: Mapping[str, FlowRecord]) -> int:
    return GETTERS[ref.attr](env[ref.var])


def evaluate(h: Expr, flows: Sequence[FlowRecord], env: Mapping[str, FlowRecord] | None = None) -> bool:
    """Truth value of ``h`` on the flow set ``flows``."""
    flows = list(flows)
    return _eval(h, flows, dict(env or {}))


def _eval(node, F, env) -> bool:
    if isinstance(node, Compare):
        left = attr_value(node.left, env)
        right = attr_value(node.right, env) if isinstance(node.right, AttrRef) else node.right
        return CMP[node.op](left, right)
    if isinstance(node, InCidr):
        net = node.network
        value = attr_value(node.ref, env)
        return (value & int(net.netmask)) == int(net.network_address)
    if isinstance(node, InSet):
        return attr_value(node.ref, env) in node.values
    if isinstance(node, TimeDiff):
        diff = attr_value(node.left, env) - attr_value(node.right, env)
        return CMP[node.op](diff, node.bound_ms)
    if isinstance(node, And):
        return _eval(node.left, F, env) and _eval(node.right, F, env)
    if isinstance(node, Or):
        return _eval(node.left, F, env) or _eval(node.right, F, env)
    if isinstance(node, Not):
        return not _eval(node.operand, F, env)
    if isinstance(node, Forall):
        for combo in itertools.product(F, repeat=len(node.vars)):
            inner = {**env, **dict(zip(node.vars, combo))}
            if not _eval(node.body, F, inner):
                return False
        return True
    if isinstance(node, Exists):
        for combo in itertools.product(F, repeat=len(node.vars)):
            inner = {**env, **dict(zip(node.vars, combo))}
            if _eval(node.body, F, inner):
                return True
        return False
    if isinstance(node, Cardinality):
        getter = GETTERS[node.attr]
        seen = set()
        for f in F:
            if node.filter is None or _eval(node.filter, F, {**env, node.var: f}):
                seen.add(getter(f))
        return CMP[node.op](len(seen), node.bound)
    raise TypeError(f"not a hypothesis node: {node!r}")
