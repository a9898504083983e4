"""Rule normal forms: VNF, HNF, SHNF, Skolemization and IFC."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .terms import (
    Atom,
    Conjunct,
    Const,
    Func,
    RuleClassError,
    Rule,
    Var,
    _natural,
    exported_vars,
    sorted_atoms,
)
from .unify import apply_atoms


# ---------------------------------------------------------------- VNF

def _term_code(t, fixed: dict, names: dict, fresh: list, tag: str):
    if isinstance(t, Var):
        if t in fixed:
            return (0, fixed[t])
        if t in names:
            return (0, names[t])
        if t in fresh:
            return (0, (tag, len(names) + fresh.index(t) + 1, ""))
        return (0, _natural(t.name))
    if isinstance(t, Const):
        return (1, _natural(t.name))
    return (2, _natural(t.name), tuple(_term_code(a, fixed, names, fresh, tag) for a in t.args))


def _atom_code(atom: Atom, fixed: dict, names: dict, free: set, tag: str) -> tuple:
    """Encoding of ``atom`` when its unnamed free variables get the next numbers."""
    fresh: list = []
    for v in atom.variables():
        if v in free and v not in names and v not in fresh:
            fresh.append(v)
    code = (atom.pred, len(atom.args),
            tuple(_term_code(t, fixed, names, fresh, tag) for t in atom.args))
    return code, fresh


def _refined_colors(atoms: list, fixed: dict, free: set) -> dict:
    """Colour refinement of ``free``: equal colours for variables related by an isomorphism."""

    def enc(t, colors, me):
        if isinstance(t, Var):
            if t == me:
                return (0,)
            if t in fixed:
                return (1, fixed[t])
            if t in colors:
                return (2, colors[t])
            return (3,)
        if isinstance(t, Const):
            return (4, t.name)
        return (5, t.name, tuple(enc(a, colors, me) for a in t.args))

    occurs: dict = {v: [] for v in free}
    for a in atoms:
        for v in a.variables():
            if v in occurs:
                occurs[v].append(a)
    colors = {v: 0 for v in free}
    classes = 1
    while True:
        sig = {v: (colors[v], tuple(sorted((a.pred, tuple(enc(t, colors, v) for t in a.args))
                                           for a in occurs[v])))
               for v in free}
        ranks = {s: i for i, s in enumerate(sorted(set(sig.values())))}
        colors = {v: ranks[sig[v]] for v in free}
        if len(ranks) == classes:
            return colors
        classes = len(ranks)


def _minimal_labelings(atoms: list, fixed: dict, free: set, tag: str) -> tuple:
    """Least sorted encoding of ``atoms`` over all numberings of ``free``.

    Variables in ``free`` are numbered ``tag1, tag2, ...`` by first
    occurrence; ``fixed`` gives codes of variables named elsewhere.  Returns
    the minimal code sequence and every numbering that attains it.
    """
    best: list = [None, []]
    colors = _refined_colors(atoms, fixed, free)

    def search(remaining: list, names: dict, prefix: tuple):
        if best[0] is not None and prefix > best[0][: len(prefix)]:
            return
        if not remaining:
            if best[0] is None or prefix < best[0]:
                best[0], best[1] = prefix, [names]
            elif prefix == best[0]:
                best[1].append(names)
            return
        coded = [(_atom_code(a, fixed, names, free, tag), a) for a in remaining]
        low = min(c for (c, _), _ in coded)
        # among tied atoms, only those whose new variables have least colours
        tied = [(code, fresh, atom) for (code, fresh), atom in coded if code == low]
        low_colors = min(tuple(colors[v] for v in fresh) for _, fresh, _ in tied)
        for code, fresh, atom in tied:
            if tuple(colors[v] for v in fresh) != low_colors:
                continue
            ext = dict(names)
            for v in fresh:
                ext[v] = (tag, len(ext) + 1, "")
            search([a for a in remaining if a != atom], ext, prefix + (code,))

    search(list(atoms), {}, ())
    return best[0], best[1]


def canonical_order(rule: Rule, sort_head: bool = False) -> tuple:
    """Canonical renaming of ``rule``.

    Returns ``(universal, existential)`` where ``universal`` maps every body
    variable to ``X<i>`` and ``existential`` is a list, one dict per head
    conjunct (in output order), mapping existentials to ``Y<j>``; plus the
    conjunct order.
    """
    bvars = rule.body_vars()
    _, labelings = _minimal_labelings(list(rule.body), {}, bvars, "X")
    if not labelings:
        labelings = [{}]
    best = None
    for names in labelings:
        heads = []
        for idx, c in enumerate(rule.head):
            code, ex_names = _minimal_labelings(list(c.atoms), names, set(c.existentials), "Y")
            heads.append((code, idx, ex_names[0]))
        order = sorted(heads, key=lambda h: h[0]) if sort_head else heads
        key = tuple(h[0] for h in order)
        if best is None or key < best[0]:
            best = (key, names, order)
    _, names, order = best
    universal = {v: Var(f"{t[0]}{t[1]}") for v, t in names.items()}
    existential = [{v: Var(f"{t[0]}{t[1]}") for v, t in h[2].items()} for h in order]
    return universal, existential, [h[1] for h in order]


def vnf(rule: Rule, sort_head: bool = False) -> Rule:
    """Variable normal form.

    Body variables become ``X1..Xn`` and each conjunct's existentials become
    ``Y1..Ym``, numbered by first occurrence in canonical printing order.
    Alpha-equivalent rules get identical results.  With ``sort_head`` the
    head is treated as a set of conjuncts and put in canonical order too.
    """
    universal, existential, order = canonical_order(rule, sort_head)
    heads = []
    for ex_map, idx in zip(existential, order):
        c = rule.head[idx]
        ren = {**universal, **ex_map}
        exs = tuple(sorted(ex_map.values(), key=lambda v: _natural(v.name)))
        heads.append(Conjunct(apply_atoms(ren, c.atoms), exs))
    return Rule.make(apply_atoms(universal, rule.body), heads)


def is_vnf(rule: Rule, sort_head: bool = False) -> bool:
    return vnf(rule, sort_head) == rule


def vnf_variables(rule: Rule) -> list:
    """Body variables of a rule in VNF, in index order."""
    return sorted(rule.body_vars(), key=lambda v: _natural(v.name))


# ---------------------------------------------------------------- HNF

def _split_full(rule: Rule) -> list:
    if len(rule.head) != 1:
        raise RuleClassError(f"HNF is only defined for non-disjunctive rules: {rule}")
    c = rule.head[0]
    ex = set(c.existentials)
    if not ex:
        return [rule]
    exist_part = frozenset(a for a in c.atoms if a.var_set() & ex)
    full_part = frozenset(c.atoms - exist_part)
    out = [Rule.make(rule.body, [Conjunct(exist_part, c.existentials)])]
    if full_part:
        out.append(Rule.make(rule.body, [Conjunct(full_part, ())]))
    return out


def hnf(rules: Iterable[Rule]) -> list:
    """Head normal form: split each non-full TGD into existential and full parts."""
    out: list = []
    for r in rules:
        for s in _split_full(r):
            if s not in out:
                out.append(s)
    return out


def is_hnf(rule: Rule) -> bool:
    if len(rule.head) != 1:
        return False
    c = rule.head[0]
    if not c.existentials:
        return True
    ex = set(c.existentials)
    return all(a.var_set() & ex for a in c.atoms)


# ---------------------------------------------------------------- SHNF

SHNF_PREFIX = "_shnf"


def shnf(rules: Iterable[Rule], start: int | None = None) -> tuple:
    """Single head normal form.

    Each rule with a multi-atom conjunct has all its conjuncts replaced by
    fresh atoms over the exported variables and existentials; one projection
    rule per original head atom recovers the originals.  Returns the rules
    and the list of fresh predicate names.
    """
    rules = list(rules)
    if start is None:
        used = [int(a.pred[len(SHNF_PREFIX):]) for r in rules for a in r.all_atoms()
                if a.pred.startswith(SHNF_PREFIX) and a.pred[len(SHNF_PREFIX):].isdigit()]
        start = max(used, default=0) + 1
    out: list = []
    fresh: list = []
    counter = start
    for r in rules:
        if r.is_single_headed():
            if r not in out:
                out.append(r)
            continue
        order = _first_occurrence(r)
        heads = []
        projections = []
        for i, c in enumerate(r.head):
            exported = exported_vars(r, i)
            args = tuple(v for v in order if v in exported) + tuple(c.existentials)
            name = f"{SHNF_PREFIX}{counter}"
            counter += 1
            fresh.append(name)
            new_atom = Atom(name, args)
            heads.append(Conjunct(frozenset([new_atom]), c.existentials))
            for h in sorted_atoms(c.atoms):
                projections.append(Rule.make([new_atom], [[h]]))
        for new in [Rule.make(r.body, heads), *projections]:
            if new not in out:
                out.append(new)
    return out, fresh


def _first_occurrence(rule: Rule) -> list:
    """Body variables ordered as in the canonical renaming."""
    universal, _, _ = canonical_order(rule)
    return sorted(universal, key=lambda v: _natural(universal[v].name))


# ---------------------------------------------------------------- Skolemization

@dataclass
class SkolemTable:
    entries: dict = field(default_factory=dict)
    counter: int = 0

    def functions(self) -> set:
        return set(self.entries.values())


def skolemize(rules: Iterable[Rule], table: SkolemTable | None = None) -> tuple:
    """Replace existentials by Skolem terms over all universal variables.

    The existential ``j`` of the ``K``-th conjunct with existentials (counted
    over all rules in order) becomes ``fK_j(X1,...,Xn)`` with the rule's
    universal variables in canonical order.
    """
    table = table or SkolemTable()
    out: list = []
    for ri, r in enumerate(rules):
        args = tuple(_first_occurrence(r))
        heads = []
        for ci, c in enumerate(r.head):
            if not c.existentials:
                heads.append(Conjunct(c.atoms, ()))
                continue
            table.counter += 1
            sub = {}
            for j, y in enumerate(c.existentials, start=1):
                name = f"f{table.counter}_{j}"
                table.entries[(ri, ci, y)] = name
                sub[y] = Func(name, args)
            heads.append(Conjunct(apply_atoms(sub, c.atoms), ()))
        out.append(Rule.make(r.body, heads))
    return out, table


def deskolemize(rule: Rule) -> Rule:
    """Replace each distinct functional term of a conjunct by an existential."""
    if rule.has_functional_body():
        raise RuleClassError(f"rule with a functional body cannot be de-Skolemized: {rule}")
    taken = {v.name for v in rule.variables()}
    heads = []
    for c in rule.head:
        terms: list = []
        for a in sorted_atoms(c.atoms):
            for t in a.args:
                if isinstance(t, Func) and t not in terms:
                    terms.append(t)
        sub = {}
        exs = []
        k = 0
        for t in terms:
            k += 1
            while f"Y{k}" in taken:
                k += 1
            y = Var(f"Y{k}")
            sub[t] = y
            exs.append(y)
        atoms = frozenset(Atom(a.pred, tuple(sub.get(t, t) for t in a.args)) for a in c.atoms)
        heads.append(Conjunct(atoms, tuple(exs)))
    return Rule.make(rule.body, heads)


# ---------------------------------------------------------------- IFC

def ifc(rule: Rule) -> Rule | None:
    """Immediate full consequence, or None when some disjunct becomes empty."""
    heads = []
    for c in rule.head:
        ex = set(c.existentials)
        kept = frozenset(a for a in c.atoms
                         if not a.is_functional() and not (a.var_set() & ex))
        if not kept:
            return None
        heads.append(Conjunct(kept, ()))
    return Rule.make(rule.body, heads)


# ---------------------------------------------------------------- shape checks

def is_guarded_simple(rule: Rule) -> bool:
    """Shallow terms, a function-free guard, functional terms hold all variables."""
    from .terms import guards, is_shallow

    allv = rule.variables()
    for a in rule.all_atoms():
        for t in a.args:
            if isinstance(t, Const):
                return False
            if isinstance(t, Func):
                if not is_shallow(t) or any(isinstance(x, Const) for x in t.args):
                    return False
                if set(x for x in t.args if isinstance(x, Var)) != allv:
                    return False
    if rule.existentials():
        return False
    return not rule.body_vars() or bool(guards(rule))
