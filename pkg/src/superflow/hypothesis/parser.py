"""Recursive-descent parser and pretty-printer for the hypothesis DSL.

Example::

    forall f, g in F: srcip(f) == srcip(g) and dstip(f) in 192.168.1.0/24
        and tstart(g) - tstart(f) <= 10s;
    require count(distinct dstip(f)) >= 256;

Clauses are separated by ``;`` and conjoined. ``not`` binds tighter than
``and``, which binds tighter than ``or``; ``implies`` is the loosest and is
desugared to ``not a or b``. A quantifier body extends as far right as
possible. ``=`` is accepted for ``==`` and ``~`` for ``in``; ``a.b.c.*``
globs are normalized to CIDR prefixes.
"""

from __future__ import annotations

import ipaddress
import re
from dataclasses import dataclass

from ..errors import HypothesisSyntaxError, UnboundVariableError, UnknownAttributeError
from .ast import (
    ATTRIBUTES, IP_ATTRIBUTES, TIME_ATTRIBUTES,
    And, AttrRef, Cardinality, Compare, Exists, Expr, Forall, InCidr, InSet, Not, Or, TimeDiff,
)

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<prefix>\d+\.\d+\.\d+\.\d+/\d+)
  | (?P<glob>\d+(?:\.\d+){0,2}(?:\.\*)+)
  | (?P<ip>\d+\.\d+\.\d+\.\d+)
  | (?P<number>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|<=|>=|[<>=(){},;:~-])
""", re.VERBOSE)

KEYWORDS = {"forall", "exists", "in", "and", "or", "not", "implies", "require", "count", "distinct", "where"}
_UNITS = {"ms": 1, "s": 1000}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise HypothesisSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            value = m.group()
            if kind == "ident" and value in KEYWORDS:
                kind = value
            elif kind == "op":
                kind = "==" if value == "=" else value
            tokens.append(Token(kind, value, line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.scope: list[str] = []

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message, tok=None, cls=HypothesisSyntaxError):
        tok = tok or self.tok
        return cls(message, tok.line, tok.col)

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def accept(self, kind):
        if self.tok.kind == kind:
            return self.advance()
        return None

    def expect(self, kind, what=None) -> Token:
        if self.tok.kind != kind:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {what or repr(kind)}, found {found!r}")
        return self.advance()

    # hypothesis := clause+
    def hypothesis(self) -> Expr:
        clauses = []
        while self.tok.kind != "eof":
            clauses.append(self.clause())
        if not clauses:
            raise self.error("empty hypothesis")
        result = clauses[0]
        for clause in clauses[1:]:
            result = And(result, clause)
        return result

    def clause(self) -> Expr:
        start = self.tok
        if self.accept("require"):
            node = self.expr()
            if not isinstance(node, Cardinality):
                raise self.error("require expects a count(...) constraint", start)
        else:
            node = self.expr()
        self.expect(";", "';' at end of clause")
        return node

    def expr(self) -> Expr:
        left = self.disjunction()
        if self.accept("implies"):
            return Or(Not(left), self.expr())
        return left

    def disjunction(self) -> Expr:
        node = self.conjunction()
        while self.accept("or"):
            node = Or(node, self.conjunction())
        return node

    def conjunction(self) -> Expr:
        node = self.unary()
        while self.accept("and"):
            node = And(node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.accept("not"):
            return Not(self.unary())
        if self.tok.kind in ("forall", "exists"):
            return self.quantified()
        return self.primary()

    def bind(self, tok: Token):
        if tok.text in self.scope:
            raise self.error(f"variable {tok.text!r} is already bound in this scope", tok)
        self.scope.append(tok.text)

    def quantified(self) -> Expr:
        kind = self.advance().kind
        names = [self.expect("ident", "variable name")]
        while self.accept(","):
            names.append(self.expect("ident", "variable name"))
        self.expect("in", "'in'")
        domain = self.expect("ident", "'F'")
        if domain.text != "F":
            raise self.error("quantifiers range over the candidate set F", domain)
        self.expect(":", "':'")
        depth = len(self.scope)
        for name in names:
            self.bind(name)
        body = self.expr()
        del self.scope[depth:]
        vars_ = tuple(t.text for t in names)
        return Forall(vars_, body) if kind == "forall" else Exists(vars_, body)

    def primary(self) -> Expr:
        if self.accept("("):
            node = self.expr()
            self.expect(")", "')'")
            return node
        if self.tok.kind == "count":
            return self.count()
        return self.term()

    def attr_ref(self) -> AttrRef:
        name = self.expect("ident", "attribute name")
        if name.text not in ATTRIBUTES:
            raise self.error(f"unknown attribute {name.text!r}", name, UnknownAttributeError)
        self.expect("(", "'('")
        var = self.expect("ident", "variable name")
        if var.text not in self.scope:
            raise self.error(f"unbound variable {var.text!r}", var, UnboundVariableError)
        self.expect(")", "')'")
        return AttrRef(name.text, var.text)

    def comparison(self) -> str:
        if self.tok.kind in ("==", "!=", "<=", ">=", "<", ">"):
            return self.advance().kind
        raise self.error("expected comparison operator")

    def count(self) -> Cardinality:
        self.expect("count")
        self.expect("(", "'('")
        self.expect("distinct", "'distinct'")
        name = self.expect("ident", "attribute name")
        if name.text not in ATTRIBUTES:
            raise self.error(f"unknown attribute {name.text!r}", name, UnknownAttributeError)
        self.expect("(", "'('")
        var = self.expect("ident", "variable name")
        self.expect(")", "')'")
        depth = len(self.scope)
        self.bind(var)
        flt = self.expr() if self.accept("where") else None
        del self.scope[depth:]
        self.expect(")", "')'")
        op = self.comparison()
        bound = self.expect("number", "integer bound")
        return Cardinality(name.text, var.text, op, int(bound.text), flt)

    def term(self) -> Expr:
        start = self.tok
        left = self.attr_ref()
        if self.tok.kind in ("in", "~"):
            self.advance()
            return self.membership(left)
        if self.accept("-"):
            right = self.attr_ref()
            if left.attr not in TIME_ATTRIBUTES or right.attr not in TIME_ATTRIBUTES:
                raise self.error("time differences need tstart/tend on both sides", start)
            op = self.comparison()
            return TimeDiff(left, right, op, self.duration())
        op = self.comparison()
        if self.tok.kind == "ident" and self.tok.text in ATTRIBUTES:
            return Compare(left, op, self.attr_ref())
        return Compare(left, op, self.literal(left))

    def duration(self) -> int:
        negative = self.accept("-") is not None
        num = self.expect("number", "duration")
        unit = self.tok
        if unit.kind != "ident" or unit.text not in _UNITS:
            raise self.error("time bound needs a unit (ms or s)", num)
        self.advance()
        value = int(num.text) * _UNITS[unit.text]
        return -value if negative else value

    def literal(self, ref: AttrRef) -> int:
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return int(tok.text)
        if tok.kind == "ip":
            if ref.attr not in IP_ATTRIBUTES:
                raise self.error(f"address literal compared with {ref.attr}", tok)
            self.advance()
            return self.address(tok)
        raise self.error("expected literal value")

    def address(self, tok: Token) -> int:
        try:
            return int(ipaddress.IPv4Address(tok.text))
        except ValueError:
            raise self.error(f"invalid IPv4 address {tok.text!r}", tok) from None

    def membership(self, ref: AttrRef) -> Expr:
        tok = self.tok
        if tok.kind in ("prefix", "glob", "ip"):
            if ref.attr not in IP_ATTRIBUTES:
                raise self.error(f"prefix membership on non-address attribute {ref.attr}", tok)
            self.advance()
            return InCidr(ref, self.network(tok))
        if self.accept("{"):
            values = [self.literal(ref)]
            while self.accept(","):
                values.append(self.literal(ref))
            self.expect("}", "'}'")
            return InSet(ref, frozenset(values))
        raise self.error("expected prefix or '{' after 'in'")

    def network(self, tok: Token) -> ipaddress.IPv4Network:
        text = tok.text
        if tok.kind == "glob":
            fixed = [p for p in text.split(".") if p != "*"]
            if len(fixed) + text.count("*") > 4:
                raise self.error(f"invalid address glob {text!r}", tok)
            text = ".".join(fixed + ["0"] * (4 - len(fixed))) + f"/{8 * len(fixed)}"
        elif tok.kind == "ip":
            text += "/32"
        try:
            return ipaddress.IPv4Network(text, strict=False)
        except ValueError:
            raise self.error(f"invalid prefix {tok.text!r}", tok) from None


def parse_hypothesis(text: str) -> Expr:
    """Parse DSL text into a closed hypothesis AST."""
    return _Parser(text).hypothesis()


# -- pretty printing ---------------------------------------------------------

def _fmt_value(attr: str, value: int) -> str:
    if attr in IP_ATTRIBUTES:
        return str(ipaddress.IPv4Address(value))
    return str(value)


def _fmt_duration(ms: int) -> str:
    sign = "-" if ms < 0 else ""
    ms = abs(ms)
    if ms % 1000 == 0:
        return f"{sign}{ms // 1000}s"
    return f"{sign}{ms}ms"


def _ref(r: AttrRef) -> str:
    return f"{r.attr}({r.var})"


_PREC = {Or: 1, And: 2, Not: 3}


def _prec(node) -> int:
    if isinstance(node, (Forall, Exists)):
        return 0
    return _PREC.get(type(node), 4)


def format_expr(node: Expr) -> str:
    if isinstance(node, (And, Or)):
        word = " and " if isinstance(node, And) else " or "
        mine = _prec(node)
        left = format_expr(node.left)
        if _prec(node.left) < mine:
            left = f"({left})"
        right = format_expr(node.right)
        if _prec(node.right) <= mine:
            right = f"({right})"
        return left + word + right
    if isinstance(node, Not):
        inner = format_expr(node.operand)
        if _prec(node.operand) < _prec(node):
            inner = f"({inner})"
        return "not " + inner
    if isinstance(node, (Forall, Exists)):
        word = "forall" if isinstance(node, Forall) else "exists"
        return f"{word} {', '.join(node.vars)} in F: {format_expr(node.body)}"
    if isinstance(node, Compare):
        right = _ref(node.right) if isinstance(node.right, AttrRef) else _fmt_value(node.left.attr, node.right)
        return f"{_ref(node.left)} {node.op} {right}"
    if isinstance(node, InCidr):
        return f"{_ref(node.ref)} in {node.network}"
    if isinstance(node, InSet):
        values = ", ".join(_fmt_value(node.ref.attr, v) for v in sorted(node.values))
        return f"{_ref(node.ref)} in {{{values}}}"
    if isinstance(node, TimeDiff):
        return f"{_ref(node.left)} - {_ref(node.right)} {node.op} {_fmt_duration(node.bound_ms)}"
    if isinstance(node, Cardinality):
        where = f" where {format_expr(node.filter)}" if node.filter is not None else ""
        return f"count(distinct {node.attr}({node.var}){where}) {node.op} {node.bound}"
    raise TypeError(f"not a hypothesis node: {node!r}")


def _clauses(node: Expr) -> list[Expr]:
    if isinstance(node, And):
        return _clauses(node.left) + [node.right]
    return [node]


def pretty_print(h: Expr) -> str:
    """Render an AST as DSL text, one clause per line; parsing it gives ``h`` back."""
    lines = []
    for clause in _clauses(h):
        prefix = "require " if isinstance(clause, Cardinality) else ""
        lines.append(f"{prefix}{format_expr(clause)};")
    return "\n".join(lines) + "\n"
