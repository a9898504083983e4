import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guarded_saturate.normal_forms import skolemize, shnf, vnf
from guarded_saturate.randomgen import random_case
from guarded_saturate.terms import Atom, Const, Var
from guarded_saturate.textio import (
    ParseError,
    format_program,
    format_rule,
    parse,
    parse_atom,
    parse_rule,
)


def test_program_with_facts_rule_and_query():
    prog = parse("R(c,d). P(d).\nR(X1,X2), T(X1) -> U(X2).\n? U(d).")
    assert prog.database == {Atom("R", (Const("c"), Const("d"))), Atom("P", (Const("d"),))}
    assert len(prog.rules) == 1 and len(prog.queries) == 1
    assert format_rule(prog.rules[0]) == "R(X1,X2), T(X1) -> U(X2)."


def test_existential_conjunct():
    rule = parse_rule("R(X1,X2) -> exists Y. S(X1,Y).")
    assert len(rule.head) == 1
    assert rule.head[0].existentials == (Var("Y"),)


def test_disjunctive_head():
    rule = parse_rule("S(X1,X2), P(X3) -> T(X1) | T(X1), U(X1).")
    assert len(rule.head) == 2


@pytest.mark.parametrize("text", [
    "R(X1,X2), T(X1) -> U(X2).",
    "R(X1,X2) -> exists Y. S(X1,Y).",
    "P(X3), S(X1,X2) -> T(X1) | T(X1), U(X1).",
])
def test_round_trip_examples(text):
    assert format_rule(parse_rule(text)) == text


def test_body_printed_in_order():
    assert format_rule(parse_rule("S(X1), R(X1) -> P(X1).")) == "R(X1), S(X1) -> P(X1)."


def test_skolem_term_printing():
    single, _ = shnf([parse_rule("R(X1,X2) -> exists Y1. S(X1,Y1).")])
    sk, _ = skolemize(single)
    assert "f1_1(X1,X2)" in format_rule(sk[0])
    assert parse_rule(format_rule(sk[0]), allow_skolem=True) == sk[0]


@pytest.mark.parametrize("text, where", [
    ("R(X) -> exists X. S(X).", "existential"),
    ("R(a,X) -> S(X).", "constants"),
    ("R(X) -> S(Y).", "neither"),
    ("R(X. ", ""),
    ("P(X).", "variable"),
    ("R(X) -> S(X,f(X)).", "function"),
    ("R(X) -> exists Y, Y. S(X,Y).", "duplicate"),
])
def test_parse_errors(text, where):
    with pytest.raises(ParseError) as err:
        parse(text)
    assert where in str(err.value)


def test_arity_mismatch_rejected():
    with pytest.raises(Exception):
        parse("P(a). P(a,b).")


def test_parse_atom():
    assert parse_atom("P(a,X)") == Atom("P", (Const("a"), Var("X")))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.booleans())
def test_round_trip_random_programs(seed, disjunctive):
    case = random_case(seed, 0, disjunctive)
    for rule in case.rules:
        for r in (rule, vnf(rule)):
            assert parse_rule(format_rule(r)) == r
    text = format_program(parse("\n".join([f"{a}." for a in case.database]
                                           + [format_rule(r) for r in case.rules])))
    again = parse(text)
    assert format_program(again) == text
    assert again.database == case.database
