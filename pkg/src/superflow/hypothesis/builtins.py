"""The scan, chat and web-fetch hypotheses, built directly as ASTs."""

from __future__ import annotations

import ipaddress
from datetime import timedelta
from typing import Union

from ..errors import HypothesisError
from .ast import (
    And, AttrRef, Cardinality, Compare, Exists, Expr, Forall, InCidr, InSet, Not, Or, TimeDiff,
)

Duration = Union[int, float, timedelta]


def _window_ms(window: Duration) -> int:
    seconds = window.total_seconds() if isinstance(window, timedelta) else window
    ms = round(seconds * 1000)
    if ms <= 0:
        raise HypothesisError(f"window must be positive, got {window!r}")
    return ms


def builtin_scan(prefix="192.168.1.0/24", window: Duration = 10, c: int = 256) -> Expr:
    """One source probing many addresses of ``prefix`` within ``window`` seconds."""
    try:
        network = ipaddress.IPv4Network(prefix, strict=False)
    except ValueError as exc:
        raise HypothesisError(f"bad prefix {prefix!r}: {exc}") from None
    if c < 1:
        raise HypothesisError("threshold c must be at least 1")
    f, g = AttrRef("srcip", "f"), AttrRef("srcip", "g")
    body = And(
        And(Compare(f, "==", g), InCidr(AttrRef("dstip", "f"), network)),
        TimeDiff(AttrRef("tstart", "g"), AttrRef("tstart", "f"), "<=", _window_ms(window)),
    )
    return And(Forall(("f", "g"), body), Cardinality("dstip", "f", ">=", c))


def builtin_chat(mtu: int = 1500) -> Expr:
    """Back-and-forth messages between two hosts, each no larger than ``mtu`` bytes."""
    if mtu < 1:
        raise HypothesisError("mtu must be at least 1")

    def eq(a, b):
        return Compare(AttrRef(a, "f"), "==", AttrRef(b, "g"))

    same = And(eq("srcip", "srcip"), eq("dstip", "dstip"))
    cross = And(eq("srcip", "dstip"), eq("dstip", "srcip"))
    return Forall(("f", "g"), And(Or(same, cross), Compare(AttrRef("bytes", "f"), "<=", mtu)))


def builtin_web(window: Duration = 300) -> Expr:
    """HTTP(S) flows each preceded by a DNS flow at most ``window`` seconds earlier."""
    ms = _window_ms(window)
    port_f = AttrRef("dstport", "f")
    t_f, t_g = AttrRef("tstart", "f"), AttrRef("tstart", "g")
    witness = Exists(("g",), And(
        And(TimeDiff(t_f, t_g, ">=", 0), TimeDiff(t_f, t_g, "<=", ms)),
        Compare(AttrRef("dstport", "g"), "==", 53),
    ))
    body = And(
        InSet(port_f, frozenset({53, 80, 443})),
        Or(Not(InSet(port_f, frozenset({80, 443}))), witness),
    )
    return Forall(("f",), body)


BUILTINS = {
    "scan": builtin_scan,
    "chat": builtin_chat,
    "web": builtin_web,
}
