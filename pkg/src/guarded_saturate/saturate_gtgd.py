"""Rewriting guarded TGDs into full TGDs: simple saturation and guarded saturation."""

from __future__ import annotations

import itertools
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .normal_forms import hnf, is_hnf, is_vnf, vnf
from .terms import (
    GuardedSaturateError,
    Rule,
    RuleClassError,
    UnguardedRuleError,
    Var,
    Conjunct,
    guards,
    is_full,
    is_guarded,
    predicates,
    rules_atoms,
    sorted_atoms,
    term_vars,
    set_widths,
    widths,
)
from .textio import format_rule
from .unify import apply_atom, apply_atoms, apply_term, rename_apart, unifiable


class ShapeViolation(GuardedSaturateError):
    """A derived rule does not have the shape the calculus guarantees."""


class SaturationLimit(GuardedSaturateError):
    """Saturation outgrew a caller-supplied rule or inference budget.

    ``partial`` holds the rules derived so far; each of them is still a
    sound consequence of the input.
    """

    def __init__(self, message: str, partial: "SaturationResult"):
        super().__init__(message)
        self.partial = partial


@dataclass
class SaturationResult:
    rules: list
    closure: list
    stats: dict = field(default_factory=dict)


def check_guarded(rules: Iterable[Rule]):
    for r in rules:
        if not is_guarded(r):
            raise UnguardedRuleError(r)


def check_tgds(rules: Iterable[Rule]):
    for r in rules:
        if len(r.head) != 1:
            raise RuleClassError(f"expected a non-disjunctive TGD: {r}")
        if r.is_functional():
            raise RuleClassError(f"function terms are not allowed here: {r}")


def schema_params(rules: list) -> tuple:
    """Number of predicates and maximum arity."""
    arities = predicates(rules_atoms(rules))
    return len(arities), max(arities.values(), default=0)


def set_partitions(items: list, max_blocks: int):
    """All partitions of ``items`` into at most ``max_blocks`` blocks."""
    n = len(items)
    if n == 0:
        yield []
        return
    labels = [0] * n

    def rec(i: int, used: int):
        if i == n:
            blocks = [[] for _ in range(used)]
            for item, lab in zip(items, labels):
                blocks[lab].append(item)
            yield blocks
            return
        for lab in range(min(used + 1, max_blocks)):
            labels[i] = lab
            yield from rec(i + 1, max(used, lab + 1))

    yield from rec(0, 0)


def _shares_predicate(heads, bodies) -> bool:
    preds = {a.pred for a in heads}
    return any(b.pred in preds for b in bodies)


def _classes(variables: Iterable[Var], theta: dict) -> list:
    groups: dict = {}
    for v in sorted(variables, key=lambda v: v.name):
        groups.setdefault(theta.get(v, v), []).append(v)
    return list(groups.values())


class _Closure:
    """FIFO given-rule closure with exact deduplication."""

    def __init__(self, check: Callable[[Rule], None], ceiling: int | None):
        self.rules: list = []
        self.seen: set = set()
        self.queue: deque = deque()
        self.check = check
        self.ceiling = ceiling
        self.stats = {"inferences": 0, "derived": 0, "shape_checks": 0, "iterations": 0}

    def add(self, rule: Rule) -> bool:
        self.check(rule)
        self.stats["shape_checks"] += 1
        if rule in self.seen:
            return False
        self.seen.add(rule)
        self.rules.append(rule)
        self.queue.append(rule)
        self.stats["derived"] += 1
        if self.ceiling is not None and len(self.rules) > self.ceiling:
            raise ShapeViolation(f"closure size {len(self.rules)} exceeds bound {self.ceiling}")
        return True


# ---------------------------------------------------------------- SSat

def composition_step(full1: Rule, full2: Rule, hwidth_bound: int, exhaustive: bool = True) -> set:
    """COMPOSITION resolvents of two full rules.

    With ``exhaustive`` every unifier within the variable bound is used.
    Otherwise coarser unifiers are tried only when the mgu itself exceeds
    the bound: their resolvents are instances of the most general one, up
    to composing with ``full1`` again.
    """
    if not _shares_predicate(full1.head[0].atoms, full2.body):
        return set()
    full1, full2, _ = rename_apart(full1, full2)
    body1, head1 = full1.body, full1.head[0].atoms
    body2, head2 = full2.body, full2.head[0].atoms
    allvars = full1.variables() | full2.variables()
    raw = set()
    for h in head1:
        for b in body2:
            theta0 = unifiable([(h, b)])
            if theta0 is None:
                continue
            classes = _classes(allvars, theta0)
            if not exhaustive and len(classes) <= hwidth_bound:
                partitions = [[[cls] for cls in classes]]
            else:
                partitions = set_partitions(classes, hwidth_bound)
            for blocks in partitions:
                theta = {}
                for i, block in enumerate(blocks):
                    target = Var(f"_u{i}")
                    for cls in block:
                        for v in cls:
                            theta[v] = target
                head_img = apply_atoms(theta, head1)
                body = apply_atoms(theta, body1) | (apply_atoms(theta, body2) - head_img)
                head = apply_atoms(theta, head2)
                if not exhaustive and head <= body:
                    continue
                raw.add(Rule.make(body, [head]))
    return {vnf(r) for r in raw}


def original_step(nonfull: Rule, full: Rule) -> set:
    """ORIGINAL resolvents of a non-full rule with a full rule.

    Unifiers are enumerated exhaustively: a partition of the universal
    variables of ``nonfull`` and an assignment of each variable of ``full``
    to a block or to an existential variable.
    """
    if not _shares_predicate(nonfull.head[0].atoms, full.body):
        return set()
    nonfull, full, _ = rename_apart(nonfull, full)
    conj = nonfull.head[0]
    ys = list(conj.existentials)
    yset = set(ys)
    xs = sorted(nonfull.body_vars(), key=lambda v: v.name)
    zs = sorted(full.body_vars(), key=lambda v: v.name)
    eta = conj.atoms
    body2 = sorted(full.body, key=lambda a: -len(a.var_set()))
    head2 = full.head[0].atoms
    out = set()
    for blocks in set_partitions(xs, len(xs)):
        xmap = {v: block[0] for block in blocks for v in block}
        eta_img = apply_atoms(xmap, eta)
        targets = [block[0] for block in blocks] + ys
        # atoms checked as soon as all their variables are assigned
        ready: dict = {}
        for a in body2:
            last = max((zs.index(v) for v in a.var_set()), default=-1)
            ready.setdefault(last, []).append(a)

        def assign(i: int, zmap: dict):
            for a in ready.get(i - 1, ()):
                img = apply_atom(zmap, a)
                if img not in eta_img and img.var_set() & yset:
                    return
            if i == len(zs):
                yield dict(zmap)
                return
            for t in targets:
                zmap[zs[i]] = t
                yield from assign(i + 1, zmap)
            zmap.pop(zs[i], None)

        for zmap in assign(0, {}):
            theta = {**xmap, **zmap}
            body2_img = apply_atoms(theta, full.body)
            matched = body2_img & eta_img
            if not matched:
                continue
            eta2 = frozenset(a for a in apply_atoms(theta, head2) if not a.var_set() & yset)
            if not eta2:
                continue
            body = apply_atoms(theta, nonfull.body) | (body2_img - eta_img)
            out.add(vnf(Rule.make(body, [eta2])))
    return out


def _ssat_shape(w: int):
    def check(rule: Rule):
        if not is_full(rule):
            raise ShapeViolation(f"SSat produced a non-full rule: {rule}")
        if not is_vnf(rule):
            raise ShapeViolation(f"SSat produced a rule not in VNF: {rule}")
        if widths(rule)[2] > w:
            raise ShapeViolation(f"SSat rule exceeds width {w}: {rule}")
    return check


def ssat(rules: Iterable[Rule], subsume: bool = False, prune: bool = True,
         max_rules: int | None = None, max_inferences: int | None = None) -> SaturationResult:
    """Simple saturation: closure of the full rules under COMPOSITION and ORIGINAL.

    With ``prune`` (the default) heads are split into single atoms, head
    atoms already in the body are dropped, rules subsumed by another closure
    rule are deleted as they appear, and COMPOSITION skips non-most-general
    unifiers where the mgu fits the bound.  Without it the closure is
    computed exactly as defined, which is only feasible for very small
    inputs.

    ``max_rules`` and ``max_inferences`` raise :class:`SaturationLimit`
    carrying the partial closure once exceeded.
    """
    rules = list(rules)
    check_tgds(rules)
    check_guarded(rules)
    start = time.perf_counter()
    base = [vnf(r) for r in hnf(rules)]
    w_b, w_h, w = set_widths(base)
    n, a = schema_params(rules)
    closure = _Closure(_ssat_shape(w), 2 ** (2 * n * w ** a) if rules else None)
    nonfull = [r for r in base if not is_full(r)]
    live: list = []
    dead: set = set()
    stats = closure.stats
    stats["pruned"] = 0

    def offer(r: Rule):
        if prune:
            pieces = _split_head(r)
            if not pieces:
                stats["pruned"] += 1
                return
            if pieces != [r]:
                for p in pieces:
                    offer(p)
                return
            if r in closure.seen:
                return
            if any(l not in dead and subsumes(l, r) for l in live):
                stats["pruned"] += 1
                return
        if closure.add(r):
            if prune:
                for l in live:
                    if l not in dead and subsumes(r, l):
                        dead.add(l)
                        stats["pruned"] += 1
            live.append(r)

    for r in base:
        if is_full(r):
            offer(r)
    processed: list = []
    while closure.queue:
        r = closure.queue.popleft()
        if r in dead:
            continue
        stats["iterations"] += 1
        processed = [p for p in processed if p not in dead]
        processed.append(r)
        for batch in _ssat_resolvents(r, processed, nonfull, w_h, not prune):
            stats["inferences"] += 1
            for s in sorted(batch, key=format_rule):
                offer(s)
                if max_rules is not None and len(closure.rules) > max_rules:
                    over = f"SSat closure passed {max_rules} rules"
                    break
            else:
                if max_inferences is None or stats["inferences"] < max_inferences:
                    continue
                over = f"SSat used {max_inferences} inferences"
            partial = _finish(closure, [r for r in closure.rules if r not in dead], False,
                              start, {"w_b": w_b, "w_h": w_h, "w": w, "n": n, "a": a})
            raise SaturationLimit(over, partial)
    result = [r for r in closure.rules if r not in dead]
    return _finish(closure, result, subsume, start,
                   {"w_b": w_b, "w_h": w_h, "w": w, "n": n, "a": a})


def _ssat_resolvents(r: Rule, processed: list, nonfull: list, bound: int, exhaustive: bool):
    for p in processed:
        yield composition_step(r, p, bound, exhaustive)
        if p is not r:
            yield composition_step(p, r, bound, exhaustive)
    for t in nonfull:
        yield original_step(t, r)


def _split_head(rule: Rule) -> list:
    """One rule per head atom not already in the body."""
    head = rule.head[0].atoms - rule.body
    if head == rule.head[0].atoms and len(head) == 1:
        return [rule]
    return [vnf(Rule.make(rule.body, [[h]])) for h in sorted_atoms(head)]


# ---------------------------------------------------------------- GSat

def evolve_step(nonfull: Rule, full: Rule) -> set:
    """EVOLVE resolvents of a non-full rule with a full rule."""
    if not _shares_predicate(nonfull.head[0].atoms, full.body):
        return set()
    nonfull, full, _ = rename_apart(nonfull, full)
    conj = nonfull.head[0]
    ys = conj.existentials
    yset = set(ys)
    xs = nonfull.body_vars()
    eta = sorted(conj.atoms, key=str)
    out = set()
    for g in guards(full):
        for h in eta:
            theta_star = unifiable([(h, g)], frozen=ys)
            if theta_star is None:
                continue
            rest = [b for b in sorted(full.body, key=str)
                    if b != g and apply_atom(theta_star, b).var_set() & yset]
            s_prime = [g, *rest]
            if g not in s_prime:
                raise ShapeViolation("guard missing from the selected body atoms")
            for choice in itertools.product(eta, repeat=len(rest)):
                pairs = [(h, g), *zip(choice, rest)]
                theta = unifiable(pairs, frozen=ys)
                if theta is None:
                    continue
                if any(set(term_vars(apply_term(theta, x))) & yset for x in xs):
                    continue
                # existential variable check
                if any(apply_atom(theta, b).var_set() & yset
                       for b in full.body if b not in s_prime):
                    continue
                body = apply_atoms(theta, nonfull.body | (full.body - frozenset(s_prime)))
                head = apply_atoms(theta, conj.atoms | full.head[0].atoms)
                for part in hnf([Rule.make(body, [Conjunct(head, ys)])]):
                    out.add(vnf(part))
    return out


def _gsat_shape(w_b: int, w_h: int):
    def check(rule: Rule):
        if not is_guarded(rule):
            raise ShapeViolation(f"GSat produced an unguarded rule: {rule}")
        if not is_vnf(rule):
            raise ShapeViolation(f"GSat produced a rule not in VNF: {rule}")
        if not is_hnf(rule):
            raise ShapeViolation(f"GSat produced a rule not in HNF: {rule}")
        bw, hw, _ = widths(rule)
        if bw > w_b or hw > w_h:
            raise ShapeViolation(f"GSat rule exceeds widths ({w_b},{w_h}): {rule}")
    return check


def gsat(rules: Iterable[Rule], subsume: bool = False) -> SaturationResult:
    """Guarded saturation: closure under EVOLVE, restricted to full rules."""
    rules = list(rules)
    check_tgds(rules)
    check_guarded(rules)
    start = time.perf_counter()
    base = [vnf(r) for r in hnf(rules)]
    w_b, w_h, w = set_widths(base)
    n, a = schema_params(rules)
    closure = _Closure(_gsat_shape(w_b, w_h), 2 ** (n * (w_b ** a + w_h ** a)) if rules else None)
    for r in base:
        closure.add(r)
    full: list = []
    nonfull: list = []
    while closure.queue:
        r = closure.queue.popleft()
        closure.stats["iterations"] += 1
        new: set = set()
        if is_full(r):
            full.append(r)
            for t in nonfull:
                new |= evolve_step(t, r)
                closure.stats["inferences"] += 1
        else:
            nonfull.append(r)
            for f in full:
                new |= evolve_step(r, f)
                closure.stats["inferences"] += 1
        for s in sorted(new, key=format_rule):
            closure.add(s)
    result = [r for r in closure.rules if is_full(r)]
    return _finish(closure, result, subsume, start,
                   {"w_b": w_b, "w_h": w_h, "w": w, "n": n, "a": a})


# ---------------------------------------------------------------- shared

def subsumes(general: Rule, specific: Rule) -> bool:
    """True if the full rule ``general`` logically implies ``specific`` by matching.

    Some substitution must map the body of ``general`` into the body of
    ``specific`` such that every image of a ``general`` disjunct contains a
    disjunct of ``specific``.
    """
    # theta only ever maps variables of ``general``, so no renaming apart is needed
    if len(general.body) > len(specific.body):
        return False
    if not {a.pred for a in general.body} <= {a.pred for a in specific.body}:
        return False
    by_pred: dict = {}
    for b in specific.body:
        by_pred.setdefault((b.pred, len(b.args)), []).append(b)
    seeds = _head_seeds(general, specific)
    if seeds is None:
        seeds = [{}]

    def extend(theta: dict, a: Atom, b: Atom):
        ext = dict(theta)
        for x, y in zip(a.args, b.args):
            if ext.setdefault(x, y) != y:
                return None
        return ext

    def match(pending: list, theta: dict):
        if not pending:
            yield theta
            return
        # most constrained atom first: fewest candidate images under theta
        best, best_cands = None, None
        for a in pending:
            cands = [e for b in by_pred.get((a.pred, len(a.args)), ())
                     if (e := extend(theta, a, b)) is not None]
            if best is None or len(cands) < len(best_cands):
                best, best_cands = a, cands
                if not cands:
                    return
        rest = [a for a in pending if a is not best]
        for ext in best_cands:
            yield from match(rest, ext)

    for seed in seeds:
        for theta in match(list(general.body), seed):
            if _head_covered(general, specific, theta):
                return True
    return False


def _head_seeds(general: Rule, specific: Rule):
    """Partial substitutions forced by single-atom heads, or None if unconstrained."""
    if len(general.head) != 1 or len(specific.head) != 1:
        return None
    g, s = general.head[0].atoms, specific.head[0].atoms
    if len(g) != 1 or len(s) != 1:
        return None
    (ga,), (sa,) = tuple(g), tuple(s)
    if ga.pred != sa.pred or len(ga.args) != len(sa.args):
        return []
    theta: dict = {}
    for x, y in zip(ga.args, sa.args):
        if theta.setdefault(x, y) != y:
            return []
    return [theta]


def _head_covered(general: Rule, specific: Rule, theta: dict) -> bool:
    if any(c.existentials for c in general.head) or any(c.existentials for c in specific.head):
        return False
    gheads = [apply_atoms(theta, c.atoms) for c in general.head]
    sheads = [c.atoms for c in specific.head]
    return all(any(s <= g for s in sheads) for g in gheads)


def subsumption_filter(rules: list) -> list:
    kept: list = []
    for r in sorted(rules, key=lambda r: (len(r.body), format_rule(r))):
        if not any(subsumes(k, r) for k in kept):
            kept.append(r)
    return kept


def _finish(closure: _Closure, result: list, subsume: bool, start: float, params: dict):
    if subsume:
        result = subsumption_filter(result)
    stats = dict(closure.stats)
    stats.update(params)
    stats["closure_size"] = len(closure.rules)
    stats["output_size"] = len(result)
    stats["seconds"] = time.perf_counter() - start
    return SaturationResult(sorted(result, key=format_rule), list(closure.rules), stats)
