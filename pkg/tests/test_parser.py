import ipaddress
from importlib import resources

import pytest
from hypothesis import given, settings

from ast_strategies import hypotheses_asts
from superflow.errors import HypothesisSyntaxError, UnboundVariableError, UnknownAttributeError
from superflow.hypothesis import (
    And, AttrRef, Cardinality, Compare, Exists, Forall, InCidr, InSet, Not, Or, TimeDiff,
    builtin_chat, builtin_scan, builtin_web, format_expr, parse_hypothesis, pretty_print,
)


def sf_text(name):
    return resources.files("superflow").joinpath("hypotheses", name).read_text()


def test_comparison_and_alias():
    h = parse_hypothesis("forall f, g in F: srcip(f) = srcip(g);")
    assert h == Forall(("f", "g"), Compare(AttrRef("srcip", "f"), "==", AttrRef("srcip", "g")))


def test_precedence():
    h = parse_hypothesis("forall f in F: bytes(f) > 1 or bytes(f) < 0 and not packets(f) == 2;")
    b = lambda op, n: Compare(AttrRef("bytes", "f"), op, n)
    assert h.body == Or(b(">", 1), And(b("<", 0), Not(Compare(AttrRef("packets", "f"), "==", 2))))


def test_implies_desugars():
    h = parse_hypothesis("forall f in F: dstport(f) == 80 implies proto(f) == 6;")
    assert h.body == Or(Not(Compare(AttrRef("dstport", "f"), "==", 80)), Compare(AttrRef("proto", "f"), "==", 6))


def test_membership_forms():
    h = parse_hypothesis("forall f in F: dstip(f) ~ 192.168.1.* and dstip(f) in 10.0.0.0/8 and dstport(f) in {22, 80};")
    cidr1, cidr2 = h.body.left.right, h.body.left.left
    assert cidr1 == InCidr(AttrRef("dstip", "f"), ipaddress.IPv4Network("10.0.0.0/8"))
    assert cidr2 == InCidr(AttrRef("dstip", "f"), ipaddress.IPv4Network("192.168.1.0/24"))
    assert h.body.right == InSet(AttrRef("dstport", "f"), frozenset({22, 80}))


def test_time_units():
    h = parse_hypothesis("forall f, g in F: tstart(g) - tstart(f) <= 1500ms and tend(f) - tstart(f) < 2s;")
    assert h.body.left == TimeDiff(AttrRef("tstart", "g"), AttrRef("tstart", "f"), "<=", 1500)
    assert h.body.right.bound_ms == 2000


def test_count_with_filter_and_comment():
    h = parse_hypothesis("# header\nrequire count(distinct dstip(f) where dstport(f) == 22) >= 3;  # trailing\n")
    assert h == Cardinality("dstip", "f", ">=", 3, Compare(AttrRef("dstport", "f"), "==", 22))


def test_multiple_clauses_conjoin():
    h = parse_hypothesis("forall f in F: bytes(f) > 1;\nrequire count(distinct srcip(f)) >= 2;")
    assert isinstance(h, And) and isinstance(h.right, Cardinality)


@pytest.mark.parametrize("text,error,column", [
    ("forall f in F: bytes(f) > 1", HypothesisSyntaxError, 28),
    ("forall f in F: foo(f) > 1;", UnknownAttributeError, 16),
    ("forall f in F: bytes(g) > 1;", UnboundVariableError, 22),
    ("forall f in F: forall f in F: bytes(f) > 1;", HypothesisSyntaxError, 23),
    ("forall f, g in F: tstart(f) - tstart(g) <= 10;", HypothesisSyntaxError, None),
    ("forall f in F: bytes(f) - bytes(f) <= 1s;", HypothesisSyntaxError, None),
    ("forall f in F: dstport(f) in {};", HypothesisSyntaxError, None),
])
def test_errors_have_positions(text, error, column):
    with pytest.raises(error) as err:
        parse_hypothesis(text)
    assert err.value.line == 1
    if column is not None:
        assert err.value.column == column


def test_builtin_files_parse_to_builtins():
    assert parse_hypothesis(sf_text("scan256.sf")) == builtin_scan("192.168.1.0/24", 10, 256)
    assert parse_hypothesis(sf_text("allotted_scan256.sf")) == builtin_scan(c=224)
    assert parse_hypothesis(sf_text("chat.sf")) == builtin_chat(1500)
    assert parse_hypothesis(sf_text("web.sf")) == builtin_web(300)


@pytest.mark.parametrize("h", [builtin_scan(), builtin_chat(), builtin_web(), builtin_scan(c=3)])
def test_builtins_round_trip(h):
    assert parse_hypothesis(pretty_print(h)) == h


def test_quantifier_operand_is_parenthesized():
    inner = Exists(("g",), Compare(AttrRef("bytes", "g"), ">", 1))
    h = Forall(("f",), Or(inner, Compare(AttrRef("bytes", "f"), ">", 2)))
    assert "(exists g in F: bytes(g) > 1) or" in format_expr(h)
    assert parse_hypothesis(pretty_print(h)) == h


@settings(max_examples=150, deadline=None, derandomize=True)
@given(hypotheses_asts)
def test_generated_asts_round_trip(h):
    assert parse_hypothesis(pretty_print(h)) == h
