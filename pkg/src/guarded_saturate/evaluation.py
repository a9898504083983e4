"""Query answering over full programs.

Plain full TGDs are evaluated bottom-up to their least fixpoint.  Full
disjunctive rules are grounded over the database constants and entailment
is reduced to propositional unsatisfiability.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

from .normal_forms import shnf
from .terms import Atom, Const, GuardedSaturateError, Query, Rule, RuleClassError, Var, is_full
from .unify import apply_atom


class NonGroundQueryError(GuardedSaturateError):
    """A quantifier-free query was expected."""


def _require_full(rules: Iterable[Rule]):
    for r in rules:
        if not is_full(r):
            raise RuleClassError(f"expected a full rule: {r}")


def _require_ground(q: Query):
    if not q.is_ground():
        raise NonGroundQueryError(f"query is not ground: {q}; use the chase for existential queries")


# ---------------------------------------------------------------- matching

class FactIndex:
    """Facts grouped by predicate, and by (predicate, position, constant)."""

    def __init__(self, facts: Iterable[Atom] = ()):
        self.by_pred: dict = defaultdict(set)
        self.by_arg: dict = defaultdict(set)
        self.facts: set = set()
        for f in facts:
            self.add(f)

    def add(self, fact: Atom) -> bool:
        if fact in self.facts:
            return False
        self.facts.add(fact)
        self.by_pred[fact.pred].add(fact)
        for i, t in enumerate(fact.args):
            self.by_arg[(fact.pred, i, t)].add(fact)
        return True

    def candidates(self, atom: Atom, theta: dict):
        best = self.by_pred.get(atom.pred, ())
        for i, t in enumerate(atom.args):
            t = theta.get(t, t) if isinstance(t, Var) else t
            if not isinstance(t, Var):
                bucket = self.by_arg.get((atom.pred, i, t), ())
                if len(bucket) < len(best):
                    best = bucket
        return best

    def __contains__(self, fact: Atom) -> bool:
        return fact in self.facts

    def __len__(self) -> int:
        return len(self.facts)


def _extend(atom: Atom, fact: Atom, theta: dict) -> dict | None:
    if len(atom.args) != len(fact.args):
        return None
    out = theta
    for t, c in zip(atom.args, fact.args):
        if isinstance(t, Var):
            bound = out.get(t)
            if bound is None:
                if out is theta:
                    out = dict(theta)
                out[t] = c
            elif bound != c:
                return None
        elif t != c:
            return None
    return out


def matches(atoms: list, index: FactIndex, theta: dict | None = None, delta: FactIndex | None = None,
            delta_pos: int = -1):
    """All extensions of ``theta`` mapping every atom into ``index``.

    With ``delta``, the atom at ``delta_pos`` must match a fact of ``delta``
    and atoms before it must avoid ``delta`` facts (so each match is found
    once across positions).
    """
    theta = theta or {}
    rest = [i for i in range(len(atoms)) if i != delta_pos]

    def rec(pending: list, theta: dict, first: int):
        if first >= 0:
            i = first
        elif not pending:
            yield theta
            return
        else:
            # join order: the atom with fewest candidate facts under theta
            i = min(pending, key=lambda j: len(index.candidates(atoms[j], theta)))
        atom = atoms[i]
        later = [j for j in pending if j != i]
        src = delta if i == delta_pos else index
        for fact in list(src.candidates(atom, theta)):
            if delta is not None and i < delta_pos and fact in delta:
                continue
            ext = _extend(atom, fact, theta)
            if ext is not None:
                yield from rec(later, ext, -1)

    yield from rec(rest, theta, delta_pos if delta_pos >= 0 else -1)


# ---------------------------------------------------------------- Datalog

@dataclass
class EvalStats:
    rounds: int = 0
    firings: int = 0


def datalog_eval(db: Iterable[Atom], rules: Iterable[Rule], method: str = "seminaive",
                 stats: EvalStats | None = None) -> set:
    """Least fixpoint of a database under full TGDs."""
    rules = list(rules)
    _require_full(rules)
    for r in rules:
        if len(r.head) != 1:
            raise RuleClassError(f"expected a non-disjunctive rule: {r}")
    stats = stats if stats is not None else EvalStats()
    index = FactIndex(db)
    if method == "naive":
        return _naive(index, rules, stats)
    if method != "seminaive":
        raise ValueError(f"unknown evaluation method {method!r}")
    plans = [(sorted(r.body, key=lambda a: -len(a.args)), r.head[0].atoms) for r in rules]
    # empty bodies fire once
    delta = FactIndex()
    for body, head in plans:
        if not body:
            stats.firings += 1
            for h in head:
                if h not in index:
                    delta.add(h)
    for body, head in plans:
        for theta in matches(body, index):
            stats.firings += 1
            for h in head:
                fact = apply_atom(theta, h)
                if fact not in index:
                    delta.add(fact)
    while len(delta):
        stats.rounds += 1
        for f in delta.facts:
            index.add(f)
        new = FactIndex()
        preds = {f.pred for f in delta.facts}
        for body, head in plans:
            for pos, atom in enumerate(body):
                if atom.pred not in preds:
                    continue
                for theta in matches(body, index, delta=delta, delta_pos=pos):
                    stats.firings += 1
                    for h in head:
                        fact = apply_atom(theta, h)
                        if fact not in index:
                            new.add(fact)
        delta = new
    return set(index.facts)


def _naive(index: FactIndex, rules: list, stats: EvalStats) -> set:
    changed = True
    while changed:
        changed = False
        stats.rounds += 1
        found = []
        for r in rules:
            for theta in matches(sorted(r.body, key=lambda a: -len(a.args)), index):
                stats.firings += 1
                found.extend(apply_atom(theta, h) for h in r.head[0].atoms)
        for f in found:
            changed |= index.add(f)
    return set(index.facts)


def answer_ucq(instance: Iterable[Atom], q: Query) -> bool:
    """True iff every atom of some disjunct of the ground query is in ``instance``."""
    _require_ground(q)
    facts = instance if isinstance(instance, (set, frozenset)) else set(instance)
    return any(d <= facts for d in q.disjuncts)


# ---------------------------------------------------------------- disjunctive

@dataclass(frozen=True)
class GroundClause:
    negatives: frozenset
    positives: frozenset

    def is_tautology(self) -> bool:
        return bool(self.negatives & self.positives)

    def subsumes(self, other: "GroundClause") -> bool:
        return self.negatives <= other.negatives and self.positives <= other.positives


def _single_headed_full(rules: list) -> list:
    _require_full(rules)
    if all(r.is_single_headed() for r in rules):
        return rules
    out, _ = shnf(rules)
    return out


def overapproximation(db: Iterable[Atom], rules: list) -> set:
    """Facts derivable when every disjunction is read as a conjunction."""
    merged = [Rule.make(r.body, [frozenset(a for c in r.head for a in c.atoms)])
              for r in rules if r.head]
    return datalog_eval(db, merged)


def ground_clauses(db: Iterable[Atom], rules: Iterable[Rule], q: Query) -> list:
    """Clauses for the database, the negated query and relevant rule instances.

    Only rule instances whose body lies in the positive over-approximation
    are produced; other instances contain an atom that occurs only
    negatively, so dropping them preserves satisfiability.
    """
    _require_ground(q)
    db = set(db)
    rules = _single_headed_full(list(rules))
    reach = FactIndex(overapproximation(db, rules))
    clauses = [GroundClause(frozenset(), frozenset([f])) for f in sorted(db, key=str)]
    for d in q.disjuncts:
        clauses.append(GroundClause(frozenset(d), frozenset()))
    seen = set(clauses)
    for r in rules:
        body = sorted(r.body, key=lambda a: -len(a.args))
        heads = [next(iter(c.atoms)) for c in r.head]
        for theta in matches(body, reach):
            c = GroundClause(frozenset(apply_atom(theta, b) for b in r.body),
                             frozenset(apply_atom(theta, h) for h in heads))
            if c not in seen:
                seen.add(c)
                clauses.append(c)
    return clauses


def disdatalog_entails(db: Iterable[Atom], rules: Iterable[Rule], q: Query,
                       method: str = "dpll") -> bool:
    """Certain truth of a ground query under full disjunctive rules."""
    clauses = ground_clauses(db, rules, q)
    if method == "dpll":
        return not dpll_satisfiable(clauses)
    if method == "resolution":
        return resolution_unsat(clauses)
    if method == "brute":
        return not brute_force_satisfiable(clauses)
    raise ValueError(f"unknown method {method!r}")


def _to_int_clauses(clauses: list) -> tuple:
    atoms: dict = {}
    out = []
    for c in clauses:
        lits = set()
        for a in c.negatives:
            lits.add(-atoms.setdefault(a, len(atoms) + 1))
        for a in c.positives:
            lits.add(atoms.setdefault(a, len(atoms) + 1))
        out.append(frozenset(lits))
    return out, atoms


def dpll_satisfiable(clauses: list) -> bool:
    """DPLL with unit propagation over ground clauses."""
    ints, _ = _to_int_clauses(clauses)
    ints = [c for c in ints if not any(-l in c for l in c)]
    return _dpll(ints, {})


def _dpll(clauses: list, assign: dict) -> bool:
    clauses = list(clauses)
    while True:
        unit = None
        simplified = []
        for c in clauses:
            if any(assign.get(abs(l)) == (l > 0) for l in c):
                continue
            rest = [l for l in c if abs(l) not in assign]
            if not rest:
                return False
            if len(rest) == 1 and unit is None:
                unit = rest[0]
            simplified.append(rest)
        if not simplified:
            return True
        if unit is None:
            break
        assign = {**assign, abs(unit): unit > 0}
        clauses = simplified
    # branch on the most frequent variable
    counts: dict = defaultdict(int)
    for c in simplified:
        for l in c:
            counts[abs(l)] += 1
    var = max(sorted(counts), key=lambda v: counts[v])
    return _dpll(simplified, {**assign, var: True}) or _dpll(simplified, {**assign, var: False})


def resolution_unsat(clauses: list, limit: int = 200000) -> bool:
    """Propositional resolution closure with subsumption and tautology deletion."""
    ints, _ = _to_int_clauses(clauses)
    pending = sorted({c for c in ints if not any(-l in c for l in c)}, key=len)
    kept: list = []
    while pending:
        pending.sort(key=len)
        c = pending.pop(0)
        if not c:
            return True
        if any(k <= c for k in kept):
            continue
        kept[:] = [k for k in kept if not c <= k]
        for p in kept:
            for l in c:
                if -l not in p:
                    continue
                r = (c - {l}) | (p - {-l})
                if any(-x in r for x in r):
                    continue
                if not r:
                    return True
                if not any(k <= r for k in kept):
                    pending.append(frozenset(r))
        kept.append(c)
        if len(kept) > limit:
            raise RuntimeError("resolution closure exceeded its clause limit")
    return False


def brute_force_satisfiable(clauses: list) -> bool:
    """Enumerate every truth assignment; only for small clause sets."""
    ints, atoms = _to_int_clauses(clauses)
    n = len(atoms)
    if n > 22:
        raise ValueError("too many atoms for brute-force enumeration")
    for bits in itertools.product((False, True), repeat=n):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in c) for c in ints):
            return True
    return False


def constants(facts: Iterable[Atom]) -> set:
    out = set()
    for f in facts:
        out.update(t for t in f.args if isinstance(t, Const))
    return out
