"""Substitutions, renamings and most general unifiers.

A substitution is a plain ``dict`` from :class:`Var` to term; variables
outside its domain are left unchanged.
"""

from __future__ import annotations

from typing import Iterable

from .terms import (
    Atom,
    Conjunct,
    Const,
    Func,
    GuardedSaturateError,
    Query,
    Rule,
    Var,
    is_shallow,
)


class NotUnifiable(GuardedSaturateError):
    pass


def apply_term(s: dict, t):
    if isinstance(t, Var):
        return s.get(t, t)
    if isinstance(t, Func):
        return Func(t.name, tuple(apply_term(s, a) for a in t.args))
    return t


def apply_atom(s: dict, a: Atom) -> Atom:
    if not s:
        return a
    return Atom(a.pred, tuple(apply_term(s, t) for t in a.args))


def apply_atoms(s: dict, atoms: Iterable[Atom]) -> frozenset:
    return frozenset(apply_atom(s, a) for a in atoms)


def apply(s: dict, target):
    """Apply ``s`` to a term, atom, atom set, conjunct, rule or query.

    Existential variables of a rule are bound, so ``s`` is not applied to
    them.
    """
    if isinstance(target, (Var, Const, Func)):
        return apply_term(s, target)
    if isinstance(target, Atom):
        return apply_atom(s, target)
    if isinstance(target, Conjunct):
        inner = {k: v for k, v in s.items() if k not in target.existentials}
        return Conjunct(apply_atoms(inner, target.atoms), target.existentials)
    if isinstance(target, Rule):
        return Rule.make(apply_atoms(s, target.body), [apply(s, c) for c in target.head])
    if isinstance(target, Query):
        return Query(tuple(apply_atoms(s, d) for d in target.disjuncts))
    if isinstance(target, (set, frozenset, list, tuple)):
        return frozenset(apply_atom(s, a) for a in target)
    raise TypeError(f"cannot apply a substitution to {type(target).__name__}")


def compose(s1: dict, s2: dict) -> dict:
    """Substitution equal to applying ``s1`` and then ``s2``."""
    out = {v: apply_term(s2, t) for v, t in s1.items()}
    for v, t in s2.items():
        out.setdefault(v, t)
    return {v: t for v, t in out.items() if t != v}


def is_renaming(s: dict) -> bool:
    images = list(s.values())
    return all(isinstance(t, Var) for t in images) and len(set(images)) == len(images)


def inverse(s: dict) -> dict:
    if not is_renaming(s):
        raise ValueError("only renamings have an inverse")
    return {t: v for v, t in s.items()}


_FROZEN_PREFIX = "\x00frozen:"


def mgu(pairs: Iterable[tuple], frozen: Iterable[Var] = ()) -> dict:
    """Most general unifier of all ``(atom, atom)`` pairs.

    Variables in ``frozen`` are treated as constants.  When a variable is
    unified with another variable, the variable from the right-hand atom is
    bound.  Raises :class:`NotUnifiable` on failure.
    """
    freeze = {v: Const(_FROZEN_PREFIX + v.name) for v in frozen}
    thaw = {c: v for v, c in freeze.items()}
    eqs = []
    for a, b in pairs:
        if a.pred != b.pred or len(a.args) != len(b.args):
            raise NotUnifiable(f"{a} and {b} have different predicates")
        for s, t in zip(a.args, b.args):
            if not (is_shallow(s) and is_shallow(t)):
                raise ValueError("mgu only supports shallow terms")
            eqs.append((apply_term(freeze, s), apply_term(freeze, t)))
    sol: dict = {}
    while eqs:
        s, t = eqs.pop()
        s, t = apply_term(sol, s), apply_term(sol, t)
        if s == t:
            continue
        if isinstance(t, Var):
            var, val = t, s
        elif isinstance(s, Var):
            var, val = s, t
        elif isinstance(s, Func) and isinstance(t, Func):
            if s.name != t.name or len(s.args) != len(t.args):
                raise NotUnifiable(f"cannot unify {s} and {t}")
            eqs.extend(zip(s.args, t.args))
            continue
        else:
            raise NotUnifiable(f"cannot unify {_show(s, thaw)} and {_show(t, thaw)}")
        if isinstance(val, Func) and any(var == a for a in _func_vars(val)):
            raise NotUnifiable(f"occurs check: {var} in {_show(val, thaw)}")
        binding = {var: val}
        sol = {v: apply_term(binding, u) for v, u in sol.items()}
        sol[var] = val
    return {v: _thaw(t, thaw) for v, t in sol.items()}


def _thaw(t, thaw: dict):
    if isinstance(t, Const):
        return thaw.get(t, t)
    if isinstance(t, Func):
        return Func(t.name, tuple(_thaw(a, thaw) for a in t.args))
    return t


def _func_vars(t: Func):
    for a in t.args:
        if isinstance(a, Var):
            yield a
        elif isinstance(a, Func):
            yield from _func_vars(a)


def _show(t, thaw: dict) -> str:
    return str(_thaw(t, thaw))


def unifiable(pairs: Iterable[tuple], frozen: Iterable[Var] = ()) -> dict | None:
    try:
        return mgu(pairs, frozen)
    except NotUnifiable:
        return None


def rename_apart(r1: Rule, r2: Rule, keep: Iterable[Var] = ()) -> tuple:
    """Rename the variables of ``r2`` away from those of ``r1``.

    Variables listed in ``keep`` are never renamed.  Returns the two rules
    and the renaming applied to ``r2``.
    """
    keep = set(keep)
    used = r1.variables() | {v for c in r1.head for v in c.existentials}
    taken = used | r2.variables()
    ren: dict = {}
    for v in sorted(r2.variables() | r2.existentials(), key=lambda v: v.name):
        if v in used and v not in keep:
            k = 1
            name = f"{v.name}_r"
            while Var(name) in taken:
                k += 1
                name = f"{v.name}_r{k}"
            ren[v] = Var(name)
            taken.add(Var(name))
    if not ren:
        return r1, r2, {}
    return r1, rename_rule(r2, ren), ren


def rename_rule(rule: Rule, ren: dict) -> Rule:
    """Apply a renaming to all variables of ``rule``, existentials included."""
    heads = [Conjunct(apply_atoms(ren, c.atoms), tuple(ren.get(v, v) for v in c.existentials))
             for c in rule.head]
    return Rule.make(apply_atoms(ren, rule.body), heads)
