"""Superflow hypothesis language: AST, parser, reference evaluator, classifier."""

from .ast import (
    And, AttrRef, Cardinality, Compare, Exists, Expr, Forall, InCidr, InSet, Not, Or, TimeDiff,
)
from .builtins import BUILTINS, builtin_chat, builtin_scan, builtin_web
from .classify import HypothesisClass, MonitorPlan, classify
from .evaluate import evaluate
from .parser import format_expr, parse_hypothesis, pretty_print

__all__ = [
    "And", "AttrRef", "Cardinality", "Compare", "Exists", "Expr", "Forall", "InCidr", "InSet",
    "Not", "Or", "TimeDiff", "BUILTINS", "builtin_chat", "builtin_scan", "builtin_web",
    "HypothesisClass", "MonitorPlan", "classify", "evaluate", "format_expr",
    "parse_hypothesis", "pretty_print",
]
