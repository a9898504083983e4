"""Terms, atoms, rules, databases and queries.

Rules use one representation for TGDs, disjunctive TGDs and Skolemized
guarded simple rules: a body atom set plus a tuple of head conjuncts, each
carrying its own existential variables.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Union


class GuardedSaturateError(Exception):
    """Base class for all errors raised by this package."""


class ArityError(GuardedSaturateError):
    pass


class UnguardedRuleError(GuardedSaturateError):
    def __init__(self, rule: "Rule", message: str | None = None):
        self.rule = rule
        super().__init__(message or f"rule is not guarded: {rule}")


class RuleClassError(GuardedSaturateError):
    """A rule does not belong to the class an operation expects."""


_NUM_SUFFIX = re.compile(r"^(.*?)(\d+)(.*)$")


def _natural(name: str) -> tuple:
    m = _NUM_SUFFIX.match(name)
    if m is None:
        return (name, -1, "")
    return (m.group(1), int(m.group(2)), m.group(3))


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Func:
    name: str
    args: tuple

    def __str__(self) -> str:
        return f"{self.name}({','.join(map(str, self.args))})"


Term = Union[Var, Const, Func]


def term_key(t: Term) -> tuple:
    if isinstance(t, Var):
        return (0, _natural(t.name))
    if isinstance(t, Const):
        return (1, _natural(t.name))
    return (2, _natural(t.name), tuple(term_key(a) for a in t.args))


def term_vars(t: Term) -> Iterator[Var]:
    if isinstance(t, Var):
        yield t
    elif isinstance(t, Func):
        for a in t.args:
            yield from term_vars(a)


def is_shallow(t: Term) -> bool:
    if isinstance(t, Func):
        return all(not isinstance(a, Func) for a in t.args)
    return True


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple = ()

    def __str__(self) -> str:
        if not self.args:
            return self.pred
        return f"{self.pred}({','.join(map(str, self.args))})"

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> Iterator[Var]:
        for t in self.args:
            yield from term_vars(t)

    @cached_property
    def _vars(self) -> frozenset:
        return frozenset(self.variables())

    def var_set(self) -> frozenset:
        return self._vars

    def is_ground(self) -> bool:
        return not self._vars

    @cached_property
    def _functional(self) -> bool:
        return any(isinstance(t, Func) for t in self.args)

    def is_functional(self) -> bool:
        return self._functional

    def constants(self) -> set:
        out = set()
        for t in self.args:
            if isinstance(t, Const):
                out.add(t)
            elif isinstance(t, Func):
                out.update(a for a in t.args if isinstance(a, Const))
        return out


def atom_key(a: Atom) -> tuple:
    return (a.pred, len(a.args), tuple(term_key(t) for t in a.args))


def sorted_atoms(atoms: Iterable[Atom]) -> list:
    return sorted(atoms, key=atom_key)


def atoms_vars(atoms: Iterable[Atom]) -> set:
    out = set()
    for a in atoms:
        out |= a.var_set()
    return out


def ordered_vars(atoms: Iterable[Atom]) -> list:
    """Variables in order of first occurrence, scanning atoms as given."""
    seen: dict = {}
    for a in atoms:
        for v in a.variables():
            seen.setdefault(v, None)
    return list(seen)


@dataclass(frozen=True)
class Conjunct:
    atoms: frozenset
    existentials: tuple = ()

    def variables(self) -> set:
        return atoms_vars(self.atoms)


@dataclass(frozen=True)
class Rule:
    body: frozenset
    head: tuple = field(default=())

    @staticmethod
    def make(body: Iterable[Atom], head: Iterable) -> "Rule":
        """Build a rule, deduplicating body atoms and head conjuncts.

        ``head`` items may be :class:`Conjunct` objects or plain iterables of
        atoms (taken as existential-free conjuncts).
        """
        conjuncts = []
        for c in head:
            if not isinstance(c, Conjunct):
                c = Conjunct(frozenset(c), ())
            elif not isinstance(c.atoms, frozenset):
                c = Conjunct(frozenset(c.atoms), tuple(c.existentials))
            present = c.variables()
            ex = tuple(v for v in c.existentials if v in present)
            c = Conjunct(c.atoms, ex)
            if c not in conjuncts:
                conjuncts.append(c)
        return Rule(frozenset(body), tuple(conjuncts))

    def __str__(self) -> str:
        from .textio import format_rule

        return format_rule(self)

    def __repr__(self) -> str:
        return f"Rule<{self}>"

    @cached_property
    def _body_vars(self) -> frozenset:
        return frozenset(atoms_vars(self.body))

    @cached_property
    def _all_vars(self) -> frozenset:
        out = set(self._body_vars)
        for c in self.head:
            out |= c.variables()
        return frozenset(out)

    def body_vars(self) -> set:
        return set(self._body_vars)

    def variables(self) -> set:
        return set(self._all_vars)

    def existentials(self) -> set:
        return {v for c in self.head for v in c.existentials}

    def head_atoms(self) -> set:
        return {a for c in self.head for a in c.atoms}

    def all_atoms(self) -> Iterator[Atom]:
        yield from self.body
        for c in self.head:
            yield from c.atoms

    @property
    def is_disjunctive(self) -> bool:
        return len(self.head) > 1

    def is_functional(self) -> bool:
        return any(a.is_functional() for a in self.all_atoms())

    def has_functional_body(self) -> bool:
        return any(a.is_functional() for a in self.body)

    def is_single_headed(self) -> bool:
        return all(len(c.atoms) == 1 for c in self.head)


def guards(rule: Rule) -> list:
    """Body atoms that contain every body variable, in canonical order.

    Only function-free atoms qualify, so for guarded simple rules this is the
    set of function-free guards.
    """
    bvars = rule.body_vars()
    return [a for a in sorted_atoms(rule.body)
            if not a.is_functional() and bvars <= a.var_set()]


def is_guarded(rule: Rule) -> bool:
    if not rule.body_vars():
        return True
    return bool(guards(rule))


def is_full(rule: Rule) -> bool:
    return all(not c.existentials for c in rule.head) and not rule.is_functional()


def is_nonfull_simple(rule: Rule) -> bool:
    """Guarded simple rule with function-free body and some functional head atom."""
    return (not rule.has_functional_body()
            and any(a.is_functional() for c in rule.head for a in c.atoms))


def widths(rule: Rule) -> tuple:
    bwidth = len(rule.body_vars())
    hwidth = max((len(c.variables()) for c in rule.head), default=0)
    return bwidth, hwidth, max(bwidth, hwidth)


def set_widths(rules: Iterable[Rule]) -> tuple:
    ws = [widths(r) for r in rules]
    if not ws:
        return 0, 0, 0
    return tuple(max(w[i] for w in ws) for i in range(3))


def exported_vars(rule: Rule, index: int) -> set:
    if not 0 <= index < len(rule.head):
        raise IndexError(f"rule has {len(rule.head)} head conjuncts, no index {index}")
    return rule.body_vars() & rule.head[index].variables()


def predicates(atoms: Iterable[Atom]) -> dict:
    """Map predicate name to arity, raising ArityError on conflicts."""
    arities: dict = {}
    for a in atoms:
        known = arities.setdefault(a.pred, len(a.args))
        if known != len(a.args):
            raise ArityError(f"predicate {a.pred} used with arity {len(a.args)} and {known}")
    return arities


def rules_atoms(rules: Iterable[Rule]) -> Iterator[Atom]:
    for r in rules:
        yield from r.all_atoms()


def constants_of(facts: Iterable[Atom]) -> set:
    out = set()
    for f in facts:
        out |= f.constants()
    return out


@dataclass(frozen=True)
class Query:
    """Union of conjunctive queries; variables, if any, are existential."""

    disjuncts: tuple

    @staticmethod
    def make(disjuncts: Iterable[Iterable[Atom]]) -> "Query":
        return Query(tuple(frozenset(d) for d in disjuncts))

    def is_ground(self) -> bool:
        return all(a.is_ground() for d in self.disjuncts for a in d)

    def atoms(self) -> Iterator[Atom]:
        for d in self.disjuncts:
            yield from d

    def __str__(self) -> str:
        from .textio import format_query

        return format_query(self)


def atomic_query(atom: Atom) -> Query:
    return Query((frozenset([atom]),))
