"""Seeded random guarded programs and databases for oracle suites."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .terms import Atom, Conjunct, Const, Rule, Var, is_guarded, predicates, rules_atoms

PRED_NAMES = ("A", "B", "C")
CONST_NAMES = ("a", "b", "c")


@dataclass(frozen=True)
class RandomParams:
    predicates: int = 3
    max_arity: int = 3
    max_rules: int = 4
    max_width: int = 3
    max_facts: int = 4
    max_disjuncts: int = 2

    def as_dict(self) -> dict:
        return asdict(self)


DISJUNCTIVE_PARAMS = RandomParams(max_rules=3)


@dataclass
class RandomCase:
    seed: int
    index: int
    rules: list
    database: set
    disjunctive: bool


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64([seed, index]))


def _schema(rng, p: RandomParams) -> dict:
    names = PRED_NAMES[: p.predicates]
    return {n: int(rng.integers(1, p.max_arity + 1)) for n in names}


def _atom(rng, pred: str, arity: int, pool: list) -> Atom:
    return Atom(pred, tuple(pool[int(rng.integers(len(pool)))] for _ in range(arity)))


def _rule(rng, schema: dict, p: RandomParams, disjunctive: bool) -> Rule:
    preds = sorted(schema)
    guard_pred = preds[int(rng.integers(len(preds)))]
    arity = schema[guard_pred]
    n_vars = int(rng.integers(1, min(arity, p.max_width) + 1))
    xs = [Var(f"X{i}") for i in range(1, n_vars + 1)]
    # the guard must mention every body variable
    args = list(xs) + [xs[int(rng.integers(n_vars))] for _ in range(arity - n_vars)]
    rng.shuffle(args)
    body = [Atom(guard_pred, tuple(args))]
    for _ in range(int(rng.integers(0, 2))):
        q = preds[int(rng.integers(len(preds)))]
        body.append(_atom(rng, q, schema[q], xs))
    n_disj = int(rng.integers(1, p.max_disjuncts + 1)) if disjunctive else 1
    head = []
    for _ in range(n_disj):
        room = p.max_width - n_vars
        n_ex = int(rng.integers(0, min(room, 2) + 1))
        ys = [Var(f"Y{i}") for i in range(1, n_ex + 1)]
        atoms = []
        for _ in range(int(rng.integers(1, 3))):
            q = preds[int(rng.integers(len(preds)))]
            atoms.append(_atom(rng, q, schema[q], xs + ys))
        head.append(Conjunct(frozenset(atoms), tuple(ys)))
    return Rule.make(body, head)


def random_case(seed: int, index: int, disjunctive: bool = False,
                params: RandomParams | None = None) -> RandomCase:
    """The ``index``-th program of the suite for ``seed``; independent of other indices."""
    p = params or (DISJUNCTIVE_PARAMS if disjunctive else RandomParams())
    rng = _rng(seed, index)
    schema = _schema(rng, p)
    rules = []
    for _ in range(int(rng.integers(1, p.max_rules + 1))):
        r = _rule(rng, schema, p, disjunctive)
        if r not in rules:
            rules.append(r)
    assert all(is_guarded(r) for r in rules)
    consts = [Const(c) for c in CONST_NAMES[: int(rng.integers(1, len(CONST_NAMES) + 1))]]
    used = predicates(rules_atoms(rules))
    db = set()
    names = sorted(used)
    for _ in range(int(rng.integers(1, p.max_facts + 1))):
        q = names[int(rng.integers(len(names)))]
        db.add(_atom(rng, q, used[q], consts))
    return RandomCase(seed, index, rules, db, disjunctive)


def random_suite(n: int, seed: int, disjunctive: bool = False,
                 params: RandomParams | None = None) -> list:
    return [random_case(seed, i, disjunctive, params) for i in range(n)]
