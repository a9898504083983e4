"""Disjunctive guarded saturation over Skolemized single-headed guarded simple rules."""

from __future__ import annotations

import math
import time
from typing import Iterable

from .normal_forms import SHNF_PREFIX, ifc, is_guarded_simple, is_vnf, shnf, skolemize, vnf
from .saturate_gtgd import (
    SaturationLimit,
    SaturationResult,
    ShapeViolation,
    _Closure,
    _finish,
    check_guarded,
    schema_params,
)
from .terms import (
    Conjunct,
    Func,
    Query,
    Rule,
    RuleClassError,
    Var,
    guards,
    is_shallow,
    is_full,
    is_nonfull_simple,
    set_widths,
    widths,
)
from .textio import format_rule
from .unify import apply_atom, apply_atoms, rename_apart, unifiable


def _is_simple(atom) -> bool:
    return all(is_shallow(t) for t in atom.args)


def devolve_step(nonfull: Rule, other: Rule) -> set:
    """D-EVOLVE resolvents of ``nonfull`` with ``other``."""
    nonfull, other, _ = rename_apart(nonfull, other)
    head = [c.atoms for c in nonfull.head]
    head_atoms = [next(iter(h)) for h in head]
    other_heads = [next(iter(c.atoms)) for c in other.head]
    other_full = is_full(other)
    other_guards = set(guards(other)) if other_full else set()
    out = set()
    for h in head_atoms:
        if not h.is_functional():
            continue
        for b in sorted(other.body, key=str):
            if not (b.is_functional() or b in other_guards):
                continue
            if b.pred != h.pred:
                continue
            theta = unifiable([(h, b)])
            if theta is None:
                continue
            h_img, b_img = apply_atom(theta, h), apply_atom(theta, b)
            if not (_is_simple(h_img) and _is_simple(b_img)):
                raise ShapeViolation(f"unified atom is not simple: {h_img}")
            body = apply_atoms(theta, nonfull.body | (other.body - {b}))
            disjuncts = apply_atoms(theta, [a for a in head_atoms if a != h] + other_heads)
            rule = Rule.make(body, [Conjunct(frozenset([a]), ()) for a in disjuncts])
            out.add(vnf(rule, sort_head=True))
    return out


def _shape(width: int):
    def check(rule: Rule):
        if not rule.is_single_headed():
            raise ShapeViolation(f"DGSat produced a rule that is not single-headed: {rule}")
        if not is_guarded_simple(rule):
            raise ShapeViolation(f"DGSat produced a rule that is not guarded simple: {rule}")
        if not is_vnf(rule, sort_head=True):
            raise ShapeViolation(f"DGSat produced a rule not in VNF: {rule}")
        if widths(rule)[0] > width:
            raise ShapeViolation(f"DGSat rule exceeds width {width}: {rule}")
    return check


def log2_size_bound(n: int, m: int, a: int, w: int) -> float:
    """log2 of the closure size bound 2^(2 n w^(a w) a^m)."""
    return 2 * n * (w ** (a * w)) * (a ** m)


def prepare(rules: Iterable[Rule]) -> tuple:
    """SHNF, then Skolemization, then VNF.  Returns (rules, fresh predicates, table)."""
    rules = list(rules)
    for r in rules:
        if r.is_functional():
            raise RuleClassError(f"function terms are not allowed here: {r}")
    check_guarded(rules)
    single, fresh = shnf(rules)
    skolem, table = skolemize(single)
    return [vnf(r, sort_head=True) for r in _to_disjunct_sets(skolem)], fresh, table


def _to_disjunct_sets(rules: list) -> list:
    out = []
    for r in rules:
        atoms = []
        for c in r.head:
            atoms.extend(c.atoms)
        out.append(Rule.make(r.body, [Conjunct(frozenset([a]), ()) for a in atoms]))
    return out


def _match_term(p, t, theta: dict) -> bool:
    if isinstance(p, Var):
        return theta.setdefault(p, t) == t
    if isinstance(p, Func):
        return (isinstance(t, Func) and p.name == t.name and len(p.args) == len(t.args)
                and all(_match_term(x, y, theta) for x, y in zip(p.args, t.args)))
    return p == t


def _head_atoms(rule: Rule) -> frozenset:
    return frozenset(a for c in rule.head for a in c.atoms)


def dsubsumes(general: Rule, specific: Rule) -> bool:
    """Some substitution maps the body of ``general`` into the body of
    ``specific`` and its disjuncts into the disjuncts of ``specific``."""
    gatoms = [(a, True) for a in general.body] + [(a, False) for a in _head_atoms(general)]
    if len(general.body) > len(specific.body) or len(general.head) > len(specific.head):
        return False
    targets = {True: list(specific.body), False: list(_head_atoms(specific))}
    # larger atoms first; they bind the most variables
    gatoms.sort(key=lambda x: -len(str(x[0])))

    def rec(i: int, theta: dict) -> bool:
        if i == len(gatoms):
            return True
        a, in_body = gatoms[i]
        for b in targets[in_body]:
            if a.pred != b.pred or len(a.args) != len(b.args):
                continue
            ext = dict(theta)
            if all(_match_term(x, y, ext) for x, y in zip(a.args, b.args)) and rec(i + 1, ext):
                return True
        return False

    return rec(0, {})


def dgsat(rules: Iterable[Rule], subsume: bool = False, prune: bool = True,
          max_rules: int | None = None, max_inferences: int | None = None) -> SaturationResult:
    """Disjunctive guarded saturation; returns full single-headed rules.

    ``prune`` drops tautologies (a disjunct already in the body) and rules
    subsumed by another closure rule.  Budgets behave as in ``ssat``.
    """
    rules = list(rules)
    start = time.perf_counter()
    base, fresh, _ = prepare(rules)
    single, _ = shnf(rules)
    w = set_widths(single)[0]
    n, a = schema_params(single)
    m = len(base)
    closure = _Closure(_shape(w), None)
    ceiling = log2_size_bound(n, m, a, w)
    params = {"w": w, "n": n, "a": a, "m": m, "fresh_predicates": fresh}
    live: list = []
    dead: set = set()
    closure.stats["pruned"] = 0

    def offer(r: Rule):
        if prune:
            if r in closure.seen:
                return
            if _head_atoms(r) & r.body or any(l not in dead and dsubsumes(l, r) for l in live):
                closure.stats["pruned"] += 1
                return
        if closure.add(r):
            if prune:
                for l in live:
                    if l not in dead and dsubsumes(r, l):
                        dead.add(l)
                        closure.stats["pruned"] += 1
            live.append(r)

    for r in base:
        offer(r)
    nonfull: list = []
    others: list = []
    while closure.queue:
        r = closure.queue.popleft()
        if r in dead:
            continue
        closure.stats["iterations"] += 1
        new: set = set()
        if is_nonfull_simple(r):
            nonfull.append(r)
        others.append(r)
        nonfull = [t for t in nonfull if t not in dead]
        others = [o for o in others if o not in dead]
        partners = others if is_nonfull_simple(r) else []
        for o in partners:
            new |= devolve_step(r, o)
            closure.stats["inferences"] += 1
        for t in nonfull:
            if t is not r:
                new |= devolve_step(t, r)
                closure.stats["inferences"] += 1
        for s in sorted(new, key=format_rule):
            offer(s)
        if math.log2(len(closure.rules)) > ceiling:
            raise ShapeViolation("DGSat closure exceeds its size bound")
        over = None
        if max_rules is not None and len(closure.rules) > max_rules:
            over = f"DGSat closure passed {max_rules} rules"
        elif max_inferences is not None and closure.stats["inferences"] >= max_inferences \
                and closure.queue:
            over = f"DGSat used {max_inferences} inferences"
        if over:
            live_rules = [r for r in closure.rules if r not in dead]
            raise SaturationLimit(over, _finish(closure, _output(live_rules), False, start, params))
    return _finish(closure, _output([r for r in closure.rules if r not in dead]), subsume, start,
                   params)


def _output(rules: list) -> list:
    """Function-free rules after IFC; rules with functional bodies are dropped."""
    result = []
    for r in rules:
        if r.has_functional_body():
            continue
        f = ifc(r)
        if f is not None:
            f = vnf(f, sort_head=True)
            if f not in result:
                result.append(f)
    return result


def check_query_predicates(q: Query, fresh: Iterable[str] = ()):
    """Reject queries over predicates introduced by SHNF."""
    fresh = set(fresh)
    for atom in q.atoms():
        if atom.pred in fresh or atom.pred.startswith(SHNF_PREFIX):
            raise RuleClassError(f"query uses the internal predicate {atom.pred}")
