import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guarded_saturate.evaluation import (
    EvalStats,
    GroundClause,
    NonGroundQueryError,
    answer_ucq,
    brute_force_satisfiable,
    datalog_eval,
    disdatalog_entails,
    dpll_satisfiable,
    resolution_unsat,
)
from guarded_saturate.randomgen import random_case
from guarded_saturate.saturate_disgtgd import dgsat
from guarded_saturate.saturate_gtgd import gsat
from guarded_saturate.terms import Atom, Const, Query
from guarded_saturate.textio import parse, parse_atom

from conftest import RS


def facts(text):
    return parse(text).database


def q(*disjuncts):
    return Query.make([[parse_atom(a) for a in d] for d in disjuncts])


def test_rewriting_reproduces_chase_proof():
    model = datalog_eval(facts("R(c). S(c)."), RS("R(X1) -> P(X1).\nR(X1), S(X1) -> M(X1)."))
    assert {parse_atom("P(c)"), parse_atom("M(c)")} <= model


def test_no_rules():
    db = facts("R(c,d).")
    assert datalog_eval(db, []) == db


def test_symmetric_closure():
    stats = EvalStats()
    model = datalog_eval(facts("R(c,d)."), RS("R(X1,X2) -> R(X2,X1)."), stats=stats)
    assert model == facts("R(c,d). R(d,c).")
    assert stats.firings <= 2


def test_answer_ucq():
    inst = facts("U(d). R(c,d).")
    assert answer_ucq(inst, q(["U(d)"]))
    assert not answer_ucq(inst, q(["U(c)"]))
    assert not answer_ucq(inst, Query.make([]))
    assert answer_ucq(inst, Query.make([[]]))


def test_disjunctive_rewriting_example(sample):
    prog = sample("disjunctive_rewriting")
    assert disdatalog_entails(prog.database, prog.rules, q(["U(d)"]))
    assert not disdatalog_entails(prog.database, prog.rules, q(["U(c)"]))


def test_disjunction_is_not_a_choice():
    db, rules = facts("A(c)."), RS("A(X) -> B(X) | C(X).")
    assert disdatalog_entails(db, rules, q(["B(c)"], ["C(c)"]))
    assert not disdatalog_entails(db, rules, q(["B(c)"]))
    # two minimal worlds, {A,B} and {A,C}; only the union query holds in both
    worlds = [facts("A(c). B(c)."), facts("A(c). C(c).")]
    assert all(answer_ucq(w, q(["B(c)"], ["C(c)"])) for w in worlds)
    assert not all(answer_ucq(w, q(["B(c)"])) for w in worlds)


def test_non_ground_query_rejected():
    with pytest.raises(NonGroundQueryError):
        disdatalog_entails(facts("A(c)."), [], q(["A(X)"]))


# ---- solver agreement on random clause sets

_atoms = [Atom(f"p{i}") for i in range(7)]
_clause = st.builds(
    lambda neg, pos: GroundClause(frozenset(neg), frozenset(pos)),
    st.sets(st.sampled_from(_atoms), max_size=3), st.sets(st.sampled_from(_atoms), max_size=3))


def _enumerate_sat(clauses):
    atoms = sorted({a for c in clauses for a in c.negatives | c.positives}, key=str)
    for bits in itertools.product((False, True), repeat=len(atoms)):
        val = dict(zip(atoms, bits))
        if all(any(not val[a] for a in c.negatives) or any(val[a] for a in c.positives)
               for c in clauses):
            return True
    return False


@settings(max_examples=300, deadline=None)
@given(st.lists(_clause, max_size=12))
def test_sat_solvers_agree(clauses):
    expected = _enumerate_sat(clauses)
    assert dpll_satisfiable(clauses) == expected
    assert brute_force_satisfiable(clauses) == expected
    assert resolution_unsat(clauses) == (not expected)


# ---- entailment versus Herbrand model enumeration

def _herbrand_entails(db, rules, query):
    """Every model over the Herbrand base that contains db and satisfies rules satisfies query."""
    consts = sorted({c for f in db for c in f.constants()}, key=lambda c: c.name)
    free = [a for a in _herbrand_base(db, rules) if a not in db]
    assert len(free) <= 12
    for bits in itertools.product((False, True), repeat=len(free)):
        world = set(db) | {a for a, b in zip(free, bits) if b}
        if _is_model(world, rules, consts) and not answer_ucq(world, query):
            return False
    return True


def _is_model(world, rules, consts):
    for r in rules:
        vs = sorted(r.body_vars(), key=lambda v: v.name)
        for values in itertools.product(consts, repeat=len(vs)):
            s = dict(zip(vs, values))
            body = {Atom(a.pred, tuple(s.get(t, t) for t in a.args)) for a in r.body}
            if body <= world and not any(
                    {Atom(a.pred, tuple(s.get(t, t) for t in a.args)) for a in c.atoms} <= world
                    for c in r.head):
                return False
    return True


def _herbrand_base(db, rules):
    consts = sorted({c for f in db for c in f.constants()}, key=lambda c: c.name)
    schema = {a.pred: a.arity for r in rules for a in r.all_atoms()}
    schema.update({f.pred: f.arity for f in db})
    return [Atom(p, args) for p, k in sorted(schema.items())
            for args in itertools.product(consts, repeat=k)]


def _enumerable_cases(n, limit=12):
    """First ``n`` generated disjunctive cases whose open Herbrand base has at most ``limit`` atoms."""
    out = []
    for index in itertools.count():
        case = random_case(13, index, True)
        rules = dgsat(case.rules).rules
        if len([a for a in _herbrand_base(case.database, rules) if a not in case.database]) <= limit:
            out.append((case, rules))
            if len(out) == n:
                return out


@pytest.mark.parametrize("case, rules", _enumerable_cases(40),
                         ids=lambda v: f"case{v.index}" if hasattr(v, "index") else "")
def test_entailment_matches_world_enumeration(case, rules):
    for atom in _herbrand_base(case.database, rules):
        query = Query.make([[atom]])
        expected = _herbrand_entails(case.database, rules, query)
        for method in ("dpll", "resolution", "brute"):
            assert disdatalog_entails(case.database, rules, query, method=method) == expected


# ---- order invariance of bottom-up evaluation

@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_datalog_order_invariant(seed, shuffle_seed):
    case = random_case(seed, 1)
    rules = gsat(case.rules).rules
    db = sorted(case.database, key=str)
    reference = datalog_eval(db, rules, method="naive")
    rng = random.Random(shuffle_seed)
    for _ in range(3):
        rs, ds = list(rules), list(db)
        rng.shuffle(rs)
        rng.shuffle(ds)
        assert datalog_eval(ds, rs) == reference
