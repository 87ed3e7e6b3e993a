"""AST nodes for superflow hypotheses.

All nodes are frozen dataclasses, so structural equality and hashing come
for free and parsed trees can be shared between threads.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass
from operator import attrgetter
from typing import Optional, Union

# DSL attribute name -> FlowRecord field
ATTRIBUTES = {
    "srcip": "src_ip",
    "dstip": "dst_ip",
    "srcport": "src_port",
    "dstport": "dst_port",
    "proto": "protocol",
    "tcpflags": "tcp_flags",
    "tstart": "t_start",
    "tend": "t_end",
    "bytes": "byte_count",
    "packets": "packet_count",
}
IP_ATTRIBUTES = frozenset({"srcip", "dstip"})
TIME_ATTRIBUTES = frozenset({"tstart", "tend"})
GETTERS = {name: attrgetter(fieldname) for name, fieldname in ATTRIBUTES.items()}

COMPARISONS = ("==", "!=", "<=", ">=", "<", ">")


@dataclass(frozen=True)
class AttrRef:
    attr: str
    var: str


@dataclass(frozen=True)
class Compare:
    """``attr(x) op attr(y)`` or ``attr(x) op literal``."""
    left: AttrRef
    op: str
    right: Union[AttrRef, int]


@dataclass(frozen=True)
class InCidr:
    ref: AttrRef
    network: ipaddress.IPv4Network


@dataclass(frozen=True)
class InSet:
    ref: AttrRef
    values: frozenset


@dataclass(frozen=True)
class TimeDiff:
    """``attr(x) - attr(y) op bound`` with the bound in milliseconds."""
    left: AttrRef
    right: AttrRef
    op: str
    bound_ms: int


@dataclass(frozen=True)
class Cardinality:
    """``count(distinct attr(var) [where filter]) op bound`` over the whole candidate set."""
    attr: str
    var: str
    op: str
    bound: int
    filter: Optional["Expr"] = None


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class Forall:
    vars: tuple
    body: "Expr"


@dataclass(frozen=True)
class Exists:
    vars: tuple
    body: "Expr"


Atom = Union[Compare, InCidr, InSet, TimeDiff]
Expr = Union[Atom, Cardinality, And, Or, Not, Forall, Exists]
ATOM_TYPES = (Compare, InCidr, InSet, TimeDiff)


def conjoin(*parts: Expr) -> Expr:
    """Left-associated conjunction, the shape the parser produces."""
    result = parts[0]
    for part in parts[1:]:
        result = And(result, part)
    return result


def conjuncts(node: Expr) -> list[Expr]:
    """Flatten nested ``And`` nodes into a list, left to right."""
    if isinstance(node, And):
        return conjuncts(node.left) + conjuncts(node.right)
    return [node]


def free_vars(node: Expr) -> frozenset:
    if isinstance(node, AttrRef):
        return frozenset({node.var})
    if isinstance(node, Compare):
        out = free_vars(node.left)
        if isinstance(node.right, AttrRef):
            out |= free_vars(node.right)
        return out
    if isinstance(node, (InCidr, InSet)):
        return free_vars(node.ref)
    if isinstance(node, TimeDiff):
        return free_vars(node.left) | free_vars(node.right)
    if isinstance(node, Cardinality):
        inner = free_vars(node.filter) if node.filter is not None else frozenset()
        return inner - {node.var}
    if isinstance(node, (And, Or)):
        return free_vars(node.left) | free_vars(node.right)
    if isinstance(node, Not):
        return free_vars(node.operand)
    if isinstance(node, (Forall, Exists)):
        return free_vars(node.body) - set(node.vars)
    raise TypeError(f"not a hypothesis node: {node!r}")


def has_quantifier(node: Expr) -> bool:
    if isinstance(node, (Forall, Exists, Cardinality)):
        return True
    if isinstance(node, (And, Or)):
        return has_quantifier(node.left) or has_quantifier(node.right)
    if isinstance(node, Not):
        return has_quantifier(node.operand)
    return False
