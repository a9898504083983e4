import pytest

from guarded_saturate.evaluation import datalog_eval
from guarded_saturate.normal_forms import is_hnf, is_vnf
from guarded_saturate.randomgen import RandomParams, random_case
from guarded_saturate.saturate_gtgd import (
    SaturationLimit,
    composition_step,
    evolve_step,
    gsat,
    original_step,
    set_partitions,
    ssat,
    subsumes,
)
from guarded_saturate.terms import UnguardedRuleError, is_full, is_guarded, widths
from guarded_saturate.verify import Budgets, confirm_rule

from conftest import R, RS, texts

EXAMPLE = """
R(X1) -> exists Y1, Y2. T(X1,Y1,Y2).
T(X1,X2,X3) -> exists Y. U(X1,X2,Y).
U(X1,X2,X3) -> P(X1), V(X1,X2).
T(X1,X2,X3), V(X1,X2), S(X1) -> M(X1).
"""

UNIF = """
R(X1,X2) -> exists Y1, Y2. S(X1,X2,Y1,Y2), T(X1,X2,Y2).
S(X1,X2,X3,X4) -> U(X4).
T(Z1,Z2,Z3), U(Z3) -> P(Z1).
"""


def test_composition_with_width_bound():
    out = texts(composition_step(R("S(X1,X2,X3,X4) -> U(X4)."),
                                 R("T(Z1,Z2,Z3), U(Z3) -> P(Z1)."), 4))
    assert "S(X1,X2,X3,X4), T(X1,X2,X4) -> P(X1)." in out
    assert "S(X1,X2,X3,X4), T(X2,X1,X4) -> P(X2)." in out
    assert all(widths(R(t))[2] <= 4 for t in out)


def test_composition_without_shared_predicate():
    assert composition_step(R("A(X1) -> B(X1)."), R("C(X1) -> D(X1)."), 3) == set()


def test_self_composition_of_identity_rule():
    assert texts(composition_step(R("R(X1) -> R(X1)."), R("R(X1) -> R(X1)."), 1)) == \
        {"R(X1) -> R(X1)."}


def test_original_step():
    tau1p = R("U(X1,X2,X3) -> P(X1), V(X1,X2).")
    out = texts(original_step(R("T(X1,X2,X3) -> exists Y. U(X1,X2,Y)."), tau1p))
    assert "T(X1,X2,X3) -> P(X1), V(X1,X2)." in out
    full = R("T(X1,X2,X3) -> P(X1), V(X1,X2).")
    assert texts(original_step(R("R(X1) -> exists Y1, Y2. T(X1,Y1,Y2)."), full)) == \
        {"R(X1) -> P(X1)."}


def test_original_step_all_existential_head():
    assert original_step(R("R(X1) -> exists Y1. T(Y1)."), R("T(X1) -> P(X1).")) == set()


def test_evolve_keeps_nonfull_resolvent():
    out = texts(evolve_step(R("R(X1) -> exists Y1, Y2. T(X1,Y1,Y2)."),
                            R("T(X1,X2,X3) -> P(X1), V(X1,X2).")))
    assert out == {"R(X1) -> P(X1).", "R(X1) -> exists Y1, Y2. T(X1,Y1,Y2), V(X1,Y1)."}


def test_evolve_second_round():
    star = R("R(X1) -> exists Y1, Y2. T(X1,Y1,Y2), V(X1,Y1).")
    out = texts(evolve_step(star, R("T(X1,X2,X3), V(X1,X2), S(X1) -> M(X1).")))
    assert "R(X1), S(X1) -> M(X1)." in out


def test_evolve_needs_guard_match():
    assert evolve_step(R("R(X1) -> exists Y1. T(X1,Y1)."), R("P(X1) -> M(X1).")) == set()


@pytest.mark.parametrize("algo", [gsat, ssat])
def test_saturation_on_example(algo):
    out = texts(algo(RS(EXAMPLE)).rules)
    assert {"R(X1) -> P(X1).", "R(X1), S(X1) -> M(X1)."} <= out


def test_gsat_unification_example():
    assert "R(X1,X2) -> P(X1)." in texts(gsat(RS(UNIF)).rules)


def test_full_input_passes_through_gsat():
    rules = RS("A(X1) -> B(X1).\nB(X1) -> C(X1).")
    assert texts(gsat(rules).rules) == texts(rules)


def test_full_input_ssat_composes():
    out = texts(ssat(RS("A(X1) -> B(X1).\nB(X1) -> C(X1).")).rules)
    assert "A(X1) -> C(X1)." in out


def test_empty_input():
    assert gsat([]).rules == [] and ssat([]).rules == []


def test_unguarded_rejected():
    with pytest.raises(UnguardedRuleError):
        gsat(RS("R(X1,X2), R(X2,X3) -> P(X1)."))


def test_set_partitions_counts():
    # Bell numbers restricted by block count
    assert sum(1 for _ in set_partitions([1, 2, 3], 3)) == 5
    assert sum(1 for _ in set_partitions([1, 2, 3], 2)) == 4
    assert sum(1 for _ in set_partitions([1, 2, 3, 4], 4)) == 15


def test_subsumption():
    assert subsumes(R("A(X1) -> B(X1)."), R("A(X1), C(X1,X2) -> B(X1)."))
    assert not subsumes(R("A(X1), C(X1,X2) -> B(X1)."), R("A(X1) -> B(X1)."))
    assert subsumes(R("C(X1,X2) -> B(X1)."), R("C(X1,X1) -> B(X1)."))
    assert not subsumes(R("C(X1,X1) -> B(X1)."), R("C(X1,X2) -> B(X1)."))


def test_budget_returns_sound_partial_closure():
    case = random_case(7, 68)
    with pytest.raises(SaturationLimit) as err:
        ssat(case.rules, max_inferences=200)
    partial = err.value.partial
    assert partial.rules
    for rule in partial.rules[:10]:
        assert confirm_rule(rule, case.rules, False, Budgets()) == "yes"


# ---- shape invariants and agreement between routes on generated programs

SMALL = RandomParams(predicates=2, max_arity=2, max_rules=3, max_width=2)


@pytest.mark.parametrize("index", range(30))
def test_rewriting_shapes(index):
    case = random_case(11, index)
    g = gsat(case.rules)
    for r in g.closure:
        assert is_guarded(r) and is_vnf(r) and is_hnf(r)
        b, h, _ = widths(r)
        assert b <= g.stats["w_b"] and h <= g.stats["w_h"]
    assert all(is_full(r) for r in g.rules)
    s = ssat(case.rules, max_inferences=2000)
    for r in s.closure:
        assert is_full(r) and is_vnf(r) and widths(r)[2] <= s.stats["w"]


@pytest.mark.parametrize("index", range(40))
def test_pruned_ssat_matches_exact_closure(index):
    case = random_case(3, index, params=SMALL)
    try:
        exact = ssat(case.rules, prune=False, max_inferences=800)
    except SaturationLimit:
        pytest.skip("exact closure too large for the test budget")
    pruned = ssat(case.rules)
    g = gsat(case.rules)
    for db in (case.database, random_case(4, index, params=SMALL).database):
        reference = datalog_eval(db, exact.rules)
        assert datalog_eval(db, pruned.rules) == reference
        assert datalog_eval(db, g.rules) == reference
