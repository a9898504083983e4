import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guarded_saturate.chase import (
    ChaseError,
    certain_facts,
    chase,
    chase_certain,
    check_one_pass,
    check_tree_decomposition,
    disjunctive_chase,
    replay_chase,
    run_to_dot,
    run_to_json,
    tree_to_dot,
    tree_to_json,
)
from guarded_saturate.randomgen import random_case
from guarded_saturate.terms import Query
from guarded_saturate.textio import parse, parse_atom


def atoms(*texts):
    return {parse_atom(t) for t in texts}


def test_chase_proof(sample):
    prog = sample("chase_proof")
    run = chase(prog.database, prog.rules)
    assert run.fixpoint
    assert atoms("S(c,_e1)", "T(c)", "U(_e1)", "P(d,_e1)") <= run.instance
    assert parse_atom("U(d)") not in run.instance


def test_chase_answers(sample):
    prog = sample("chase_proof")
    status, steps = chase_certain(prog.database, prog.rules, prog.queries[0])
    assert status == "yes" and steps <= 4
    assert chase_certain(prog.database, prog.rules, prog.queries[1])[0] == "no"


def test_empty_rule_set():
    db = atoms("R(c,d)")
    run = chase(db, [])
    assert run.instance == db and not run.steps and run.fixpoint
    assert chase_certain(db, [], Query.make([db]))[0] == "yes"
    assert chase_certain(db, [], Query.make([atoms("R(d,c)")])) == ("no", 0)


def test_budget_exhaustion():
    prog = parse("A(c).\nA(X) -> exists Y. B(X,Y).\nB(X,Y) -> A(Y).")
    run = chase(prog.database, prog.rules, budget=10, query=Query.make([atoms("C(c)")]))
    assert run.status == "unknown" and run.exhausted and len(run.steps) == 10


def test_oblivious_fires_satisfied_triggers():
    prog = parse("R(c,d). S(c,d).\nR(X1,X2) -> exists Y. S(X1,Y).")
    assert len(chase(prog.database, prog.rules).steps) == 0
    assert len(chase(prog.database, prog.rules, mode="oblivious").steps) == 1


def test_disjunctive_rules_need_tree_chase(sample):
    prog = sample("disjunctive_chase")
    with pytest.raises(ChaseError):
        chase(prog.database, prog.rules)


def test_disjunctive_chase_existential_query(sample):
    prog = sample("disjunctive_chase")
    tree = disjunctive_chase(prog.database, prog.rules, Query.make([atoms("M(c,Y)")]))
    assert tree.status == "yes"
    assert tree.size() <= 16


def test_disjunctive_chase_union_query(sample):
    prog = sample("disjunctive_chase")
    tree = disjunctive_chase(prog.database, prog.rules, prog.queries[0])
    assert tree.status == "yes"
    # oracle: expand fully and inspect every leaf
    full = disjunctive_chase(prog.database, prog.rules, None, node_budget=200)
    assert full.status == "complete"
    for leaf in full.leaves():
        inst = full.instance(leaf)
        assert atoms("M(c,c)") <= inst or atoms("M(c,d)") <= inst


def test_disjunctive_chase_refutes_without_rules():
    tree = disjunctive_chase(atoms("R(c,d)"), [], Query.make([atoms("M(c,c)")]))
    assert tree.status == "no"


def test_certain_facts_of_choice():
    prog = parse("A(c).\nA(X) -> B(X) | C(X).\nB(X) -> D(X).\nC(X) -> D(X).")
    tree = disjunctive_chase(prog.database, prog.rules, None)
    assert certain_facts(tree) == atoms("A(c)", "D(c)")


TREE_STEPS = [
    (1, {"X1": "c", "X2": "d"}),
    (2, {"X1": "c", "X2": "d", "X3": "_e1"}),
    (3, {"X1": "c", "X2": "d", "X3": "_e2"}),
    (4, {"X1": "c", "X2": "d", "X3": "_e1"}),
    (0, {"X1": "c", "X2": "d"}, 0),
    (5, {"X1": "c", "X2": "_e3"}),
]


def test_fair_tree_like_run_is_not_one_pass(sample):
    prog = sample("tree_like")
    run = chase(prog.database, prog.rules, track_tree=True, query=prog.queries[0])
    assert run.status == "yes"
    assert check_tree_decomposition(run) == []
    result = check_one_pass(run)
    assert not result
    v, j, k = result.violation
    assert j <= k


def test_reordered_run_is_one_pass(sample):
    prog = sample("tree_like")
    run = replay_chase(prog.database, prog.rules, TREE_STEPS, propagation="ancestors")
    assert check_one_pass(run)
    assert parse_atom("M(c)") in run.instance
    assert any(f.pred == "N" for f in run.instance)
    # the same order with propagation into every node is not one-pass
    assert not check_one_pass(replay_chase(prog.database, prog.rules, TREE_STEPS))


def test_single_step_runs_are_one_pass(sample):
    prog = sample("tree_like")
    assert check_one_pass(replay_chase(prog.database, prog.rules, [TREE_STEPS[0]]))
    assert check_one_pass(replay_chase(prog.database, prog.rules, [TREE_STEPS[4]]))
    run = chase(prog.database, prog.rules, budget=1, track_tree=True)
    assert len(run.steps) == 1 and check_one_pass(run)


def test_replay_rejects_non_triggers(sample):
    prog = sample("tree_like")
    with pytest.raises(ChaseError):
        replay_chase(prog.database, prog.rules, [(2, {"X1": "c", "X2": "d", "X3": "e"})])


def test_exports(sample):
    prog = sample("tree_like")
    run = chase(prog.database, prog.rules, track_tree=True)
    data = json.loads(run_to_json(run))
    assert len(data["steps"]) == len(run.steps) and data["nodes"]
    assert run_to_dot(run).startswith("digraph")
    dprog = sample("disjunctive_chase")
    tree = disjunctive_chase(dprog.database, dprog.rules, dprog.queries[0])
    tdata = json.loads(tree_to_json(tree, dprog.rules))
    assert len(tdata["nodes"]) == tree.size()
    assert tree_to_dot(tree).count("->") == tree.size() - 1


# ---- invariants on generated programs

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_tree_decomposition_invariants(seed):
    case = random_case(seed, 2)
    run = chase(case.database, case.rules, budget=60, track_tree=True)
    assert check_tree_decomposition(run) == []
    assert case.database <= run.instance


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_restricted_and_oblivious_agree_on_database_constants(seed):
    case = random_case(seed, 3)
    r = chase(case.database, case.rules, budget=400)
    o = chase(case.database, case.rules, mode="oblivious", budget=400)
    if not (r.fixpoint and o.fixpoint):
        return
    consts = {c for f in case.database for c in f.constants()}

    def closed(inst):
        return {f for f in inst if f.constants() <= consts}

    assert closed(r.instance) == closed(o.instance)
