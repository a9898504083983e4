"""Bounded chase engines used as an independent correctness oracle.

``chase`` runs the restricted or oblivious chase for TGDs with fair (FIFO)
trigger scheduling and, for guarded rules, records a tree decomposition of
every intermediate instance.  ``disjunctive_chase`` builds chase trees for
disjunctive rules, expanding the shallowest open leaf first.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .evaluation import FactIndex, matches
from .terms import (
    Atom,
    Const,
    GuardedSaturateError,
    Query,
    Rule,
    Var,
    atomic_query,
    constants_of,
    guards,
    is_guarded,
)
from .unify import apply_atom


class ChaseError(GuardedSaturateError):
    pass


# ---------------------------------------------------------------- shared helpers

def _consts(fact: Atom) -> frozenset:
    return frozenset(t for t in fact.args if isinstance(t, Const))


def _guarded_by(fact: Atom, bag: Iterable[Atom]) -> bool:
    cs = _consts(fact)
    return any(cs <= _consts(g) for g in bag)


def _body_order(rule: Rule) -> list:
    return sorted(rule.body, key=lambda a: (-len(a.args), str(a)))


def _trigger_key(idx: int, rule: Rule, h: dict) -> tuple:
    return idx, tuple(h[v] for v in sorted(rule.body_vars(), key=lambda v: v.name))


class _FreshNames:
    def __init__(self, avoid: set, prefix: str = "_e", start: int = 0):
        self.avoid = {c.name for c in avoid}
        self.prefix = prefix
        self.k = start

    def next(self) -> Const:
        while True:
            self.k += 1
            name = f"{self.prefix}{self.k}"
            if name not in self.avoid:
                return Const(name)


def _satisfied_conjunct(conj, h: dict, index: FactIndex) -> bool:
    return next(matches(sorted(conj.atoms, key=str), index, theta=h), None) is not None


def _active(rule: Rule, h: dict, index: FactIndex) -> bool:
    return not any(_satisfied_conjunct(c, h, index) for c in rule.head)


def _instantiate(conj, h: dict, fresh: _FreshNames) -> tuple:
    ext = dict(h)
    for y in conj.existentials:
        ext[y] = fresh.next()
    return frozenset(apply_atom(ext, a) for a in conj.atoms), ext


def query_holds(q: Query, index: FactIndex) -> bool:
    """Some disjunct maps homomorphically into the instance."""
    return any(next(matches(sorted(d, key=str), index), None) is not None for d in q.disjuncts)


def _new_triggers(rules: list, index: FactIndex, delta: FactIndex | None, seen: set) -> list:
    out = []
    preds = {f.pred for f in delta.facts} if delta is not None else None
    for idx, rule in enumerate(rules):
        body = _body_order(rule)
        if delta is None:
            found = matches(body, index)
            found = [found]
        else:
            found = [matches(body, index, delta=delta, delta_pos=pos)
                     for pos, a in enumerate(body) if a.pred in preds]
        for gen in found:
            batch = []
            for h in gen:
                key = _trigger_key(idx, rule, h)
                if key not in seen:
                    seen.add(key)
                    batch.append((key, idx, h))
            out.extend(sorted(batch, key=lambda t: tuple(c.name for c in t[0][1])))
    return out


# ---------------------------------------------------------------- tree decomposition

@dataclass
class ChaseNode:
    id: int
    parent: int | None
    birth: frozenset
    bag: set
    created_at: int
    scope: frozenset = frozenset()


@dataclass
class ChaseStep:
    index: int
    rule: int
    trigger: dict
    new_facts: tuple
    node: int | None = None
    created: int | None = None
    modified: frozenset = frozenset()


@dataclass
class ChaseRun:
    database: frozenset
    rules: list
    mode: str
    steps: list = field(default_factory=list)
    nodes: list = field(default_factory=list)
    instance: set = field(default_factory=set)
    exhausted: bool = False
    fixpoint: bool = False
    status: str | None = None
    propagation: str = "all"

    @property
    def has_tree(self) -> bool:
        return bool(self.nodes)

    def subtree(self, v: int) -> set:
        out = {v}
        for n in self.nodes:
            if n.parent is not None and n.parent in out:
                out.add(n.id)
        return out


class _Tree:
    def __init__(self, run: ChaseRun, db: set, propagation: str):
        if propagation not in ("all", "ancestors"):
            raise ValueError(f"unknown propagation {propagation!r}")
        self.run = run
        self.propagation = propagation
        root = ChaseNode(0, None, frozenset(db), set(db), 0, frozenset(constants_of(db)))
        run.nodes.append(root)

    def trigger_node(self, body_img: frozenset, node: int | None = None) -> int:
        if node is not None:
            if not body_img <= self.run.nodes[node].bag:
                raise ChaseError(f"node {node} does not contain the trigger image")
            return node
        for n in reversed(self.run.nodes):
            if body_img <= n.bag:
                return n.id
        raise ChaseError("no single node contains the trigger image")

    def ancestors(self, v: int) -> list:
        out = []
        p = self.run.nodes[v].parent
        while p is not None:
            out.append(p)
            p = self.run.nodes[p].parent
        return out

    def fire(self, step: ChaseStep, rule: Rule, body_img: frozenset, head_img: frozenset,
             scope: frozenset, instance: set, node: int | None = None):
        node = self.trigger_node(body_img, node)
        step.node = node
        modified = set()
        nodes = self.run.nodes
        if rule.existentials():
            child = ChaseNode(len(nodes), node, head_img, set(head_img), step.index, scope)
            nodes.append(child)
            step.created = child.id
            modified.add(child.id)
            source = instance if self.propagation == "all" else nodes[node].bag
            for f in source:
                if f not in child.bag and _guarded_by(f, child.bag):
                    child.bag.add(f)
            origin = child.id
        else:
            before = len(nodes[node].bag)
            nodes[node].bag |= head_img
            if len(nodes[node].bag) != before:
                modified.add(node)
            origin = node
        if self.propagation == "all":
            targets = [n.id for n in nodes if n.id != origin]
        else:
            targets = self.ancestors(origin)
        for v in targets:
            bag = nodes[v].bag
            added = [f for f in head_img if f not in bag and _guarded_by(f, bag)]
            if added:
                bag.update(added)
                modified.add(v)
        step.modified = frozenset(modified)


# ---------------------------------------------------------------- chase

def chase(db: Iterable[Atom], rules: Iterable[Rule], mode: str = "restricted", budget: int = 1000,
          track_tree: bool | None = None, query: Query | None = None,
          propagation: str = "all") -> ChaseRun:
    """Fair bounded chase.

    Stops at a fixpoint, when ``budget`` steps have fired, or as soon as
    ``query`` holds.  ``run.status`` is ``yes``/``no``/``unknown`` when a
    query is given.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    if mode not in ("restricted", "oblivious"):
        raise ValueError(f"unknown chase mode {mode!r}")
    rules = list(rules)
    for r in rules:
        if len(r.head) != 1:
            raise ChaseError(f"use disjunctive_chase for disjunctive rules: {r}")
    db = set(db)
    if track_tree is None:
        track_tree = False
    if track_tree and not all(is_guarded(r) for r in rules):
        raise ChaseError("tree decompositions need guarded rules")
    run = ChaseRun(frozenset(db), rules, mode, propagation=propagation)
    tree = _Tree(run, db, propagation) if track_tree else None
    index = FactIndex(db)
    fresh = _FreshNames(constants_of(db))
    seen: set = set()
    queue = deque(_new_triggers(rules, index, None, seen))
    if query is not None and query_holds(query, index):
        run.status = "yes"
        run.instance = set(index.facts)
        return run
    while queue:
        _, idx, h = queue[0]
        rule = rules[idx]
        conj = rule.head[0]
        if mode == "restricted" and not _active(rule, h, index):
            queue.popleft()
            continue
        if len(run.steps) >= budget:
            run.exhausted = True
            break
        queue.popleft()
        head_img, ext = _instantiate(conj, h, fresh)
        body_img = frozenset(apply_atom(h, b) for b in rule.body)
        new = tuple(sorted((f for f in head_img if f not in index), key=str))
        step = ChaseStep(len(run.steps) + 1, idx, dict(h), new)
        if tree is not None:
            scope = frozenset(ext[v] for v in rule.body_vars() | set(conj.existentials))
            tree.fire(step, rule, body_img, head_img, scope, index.facts | head_img)
        run.steps.append(step)
        delta = FactIndex(new)
        for f in new:
            index.add(f)
        queue.extend(_new_triggers(rules, index, delta, seen))
        if query is not None and query_holds(query, index):
            run.status = "yes"
            run.instance = set(index.facts)
            return run
    else:
        run.fixpoint = True
    run.instance = set(index.facts)
    if query is not None:
        run.status = "no" if run.fixpoint else "unknown"
    return run


def chase_certain(db: Iterable[Atom], rules: Iterable[Rule], q: Query, budget: int = 1000,
                  mode: str = "restricted") -> tuple:
    """Returns ``(status, steps)`` with status ``yes``, ``no`` (fixpoint) or ``unknown``."""
    run = chase(db, rules, mode=mode, budget=budget, query=q)
    return run.status, len(run.steps)


def replay_chase(db: Iterable[Atom], rules: Iterable[Rule], steps: Iterable[tuple],
                 propagation: str = "all") -> ChaseRun:
    """Fire the given steps in order, recording the tree.

    Each step is ``(rule index, trigger)`` or ``(rule index, trigger, node)``;
    triggers map body variable names to constant names.  Without an explicit
    node the most recently created node holding the trigger image is used.
    Steps need not be active and may repeat.
    """
    rules = list(rules)
    db = set(db)
    run = ChaseRun(frozenset(db), rules, "replay", propagation=propagation)
    tree = _Tree(run, db, propagation)
    index = FactIndex(db)
    fresh = _FreshNames(constants_of(db))
    for spec in steps:
        idx, trig = spec[0], spec[1]
        at = spec[2] if len(spec) > 2 else None
        rule = rules[idx]
        h = {Var(k): Const(v) for k, v in trig.items()}
        body_img = frozenset(apply_atom(h, b) for b in rule.body)
        if not body_img <= index.facts:
            raise ChaseError(f"step {len(run.steps) + 1} is not a trigger")
        conj = rule.head[0]
        head_img, ext = _instantiate(conj, h, fresh)
        new = tuple(sorted((f for f in head_img if f not in index), key=str))
        step = ChaseStep(len(run.steps) + 1, idx, h, new)
        scope = frozenset(ext[v] for v in rule.body_vars() | set(conj.existentials))
        tree.fire(step, rule, body_img, head_img, scope, index.facts | head_img, at)
        run.steps.append(step)
        for f in head_img:
            index.add(f)
    run.instance = set(index.facts)
    return run


@dataclass
class OnePassResult:
    one_pass: bool
    violation: tuple | None = None

    def __bool__(self) -> bool:
        return self.one_pass


def check_one_pass(run: ChaseRun) -> OnePassResult:
    """Check that no subtree is modified once a step fires outside it.

    A violation ``(v, j, k)`` means step ``j`` fired outside the subtree of
    node ``v`` and the later (or same) step ``k`` modified that subtree.
    """
    if not run.has_tree:
        raise ChaseError("the run carries no tree provenance")
    for node in run.nodes:
        sub = run.subtree(node.id)
        for step in run.steps:
            if step.index <= node.created_at or step.node in sub:
                continue
            for later in run.steps[step.index - 1:]:
                if later.modified & sub:
                    return OnePassResult(False, (node.id, step.index, later.index))
            break
    return OnePassResult(True)


def check_tree_decomposition(run: ChaseRun) -> list:
    """Return a list of violated tree-decomposition invariants (empty when valid)."""
    problems = []
    nodes = run.nodes
    if not nodes:
        return ["no tree recorded"]
    union = set().union(*(n.bag for n in nodes))
    if union != run.instance:
        problems.append("bags do not cover the instance")
    root_consts = set().union(*(_consts(f) for f in nodes[0].bag)) if nodes[0].bag else set()
    if root_consts != set(constants_of(run.database)):
        problems.append("root constants differ from the database constants")
    for n in nodes[1:]:
        cs = set().union(*(_consts(f) for f in n.bag))
        if not cs <= n.scope:
            problems.append(f"node {n.id} mentions constants outside its trigger")
    if run.propagation == "all":
        for n in nodes:
            for f in run.instance:
                if f not in n.bag and _guarded_by(f, n.bag):
                    problems.append(f"node {n.id} is not guardedly complete for {f}")
                    break
    all_consts = set().union(*(_consts(f) for f in run.instance)) if run.instance else set()
    for c in sorted(all_consts, key=lambda c: c.name):
        holders = {n.id for n in nodes if any(c in _consts(f) for f in n.bag)}
        tops = [v for v in holders if nodes[v].parent not in holders]
        if len(tops) != 1:
            problems.append(f"nodes mentioning {c} are not connected")
    return problems


# ---------------------------------------------------------------- disjunctive chase

@dataclass
class TreeNode:
    id: int
    parent: int | None
    depth: int
    added: frozenset
    step: tuple | None = None
    children: list = field(default_factory=list)
    status: str = "open"


@dataclass
class ChaseTree:
    nodes: list = field(default_factory=list)
    status: str = "unknown"

    def leaves(self) -> list:
        return [n for n in self.nodes if not n.children]

    def instance(self, node: TreeNode) -> set:
        """Facts on the path from the root to ``node``."""
        out = set()
        while node is not None:
            out |= node.added
            node = None if node.parent is None else self.nodes[node.parent]
        return out

    def size(self) -> int:
        return len(self.nodes)


def disjunctive_chase(db: Iterable[Atom], rules: Iterable[Rule], q: Query | None,
                      node_budget: int = 5000) -> ChaseTree:
    """Breadth-first restricted disjunctive chase.

    ``status`` is ``yes`` when every leaf satisfies ``q``, ``no`` when some
    leaf is a fixpoint that does not satisfy it, and ``unknown`` when the
    node budget runs out.  With ``q`` set to None the tree is expanded until
    every leaf is a fixpoint (status ``complete``) or the budget runs out.
    """
    rules = list(rules)
    db = frozenset(db)
    avoid = constants_of(db)
    tree = ChaseTree()
    root = TreeNode(0, None, 0, db)
    tree.nodes.append(root)
    index = FactIndex(db)
    seen: set = set()
    pending = {0: (deque(_new_triggers(rules, index, None, seen)), seen, 0, index)}
    frontier = deque([0])
    while frontier:
        nid = frontier.popleft()
        node = tree.nodes[nid]
        queue, seen, counter, index = pending.pop(nid)
        if q is not None and query_holds(q, index):
            node.status = "proved"
            continue
        fired = None
        while queue:
            _, idx, h = queue.popleft()
            if _active(rules[idx], h, index):
                fired = (idx, h)
                break
        if fired is None:
            node.status = "model"
            if q is not None:
                tree.status = "no"
                return tree
            continue
        if len(tree.nodes) + len(rules[fired[0]].head) > node_budget:
            tree.status = "unknown"
            return tree
        idx, h = fired
        node.status = "expanded"
        head = rules[idx].head
        for ci, conj in enumerate(head):
            fresh = _FreshNames(avoid, start=counter)
            head_img, _ = _instantiate(conj, h, fresh)
            new = frozenset(f for f in head_img if f not in index)
            child = TreeNode(len(tree.nodes), nid, node.depth + 1, new, (idx, dict(h), ci))
            tree.nodes.append(child)
            node.children.append(child.id)
            if ci == len(head) - 1:
                # the last child takes over the parent's state
                cindex, cseen, cqueue = index, seen, queue
            else:
                cindex, cseen, cqueue = FactIndex(index.facts), set(seen), deque(queue)
            for f in new:
                cindex.add(f)
            if new:
                cqueue.extend(_new_triggers(rules, cindex, FactIndex(new), cseen))
            pending[child.id] = (cqueue, cseen, fresh.k, cindex)
            frontier.append(child.id)
    tree.status = "yes" if q is not None else "complete"
    return tree


def certain_facts(tree: ChaseTree) -> set:
    """Facts present in every leaf of a completely expanded tree."""
    leaves = tree.leaves()
    if not leaves:
        return set()
    out = tree.instance(leaves[0])
    for leaf in leaves[1:]:
        out &= tree.instance(leaf)
    return out


# ---------------------------------------------------------------- export

def run_to_json(run: ChaseRun) -> str:
    data = {
        "mode": run.mode,
        "status": run.status,
        "exhausted": run.exhausted,
        "fixpoint": run.fixpoint,
        "database": sorted(map(str, run.database)),
        "steps": [
            {
                "index": s.index,
                "rule": s.rule,
                "rule_text": str(run.rules[s.rule]),
                "trigger": {str(k): str(v) for k, v in sorted(s.trigger.items(), key=lambda kv: kv[0].name)},
                "new_facts": [str(f) for f in s.new_facts],
                "node": s.node,
                "created": s.created,
                "modified": sorted(s.modified),
            }
            for s in run.steps
        ],
        "nodes": [
            {
                "id": n.id,
                "parent": n.parent,
                "created_at": n.created_at,
                "birth": sorted(map(str, n.birth)),
                "bag": sorted(map(str, n.bag)),
            }
            for n in run.nodes
        ],
    }
    return json.dumps(data, indent=2)


def run_to_dot(run: ChaseRun) -> str:
    lines = ["digraph chase {", "  node [shape=box, fontname=monospace];"]
    for n in run.nodes:
        label = "\\n".join(sorted(map(str, n.bag)))
        lines.append(f'  n{n.id} [label="v{n.id} (step {n.created_at})\\n{label}"];')
        if n.parent is not None:
            lines.append(f"  n{n.parent} -> n{n.id};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def tree_to_json(tree: ChaseTree, rules: list) -> str:
    data = {
        "status": tree.status,
        "nodes": [
            {
                "id": n.id,
                "parent": n.parent,
                "depth": n.depth,
                "status": n.status,
                "step": None if n.step is None else {
                    "rule": n.step[0],
                    "rule_text": str(rules[n.step[0]]),
                    "trigger": {str(k): str(v) for k, v in sorted(n.step[1].items(), key=lambda kv: kv[0].name)},
                    "disjunct": n.step[2],
                },
                "instance": sorted(map(str, tree.instance(n))),
            }
            for n in tree.nodes
        ],
    }
    return json.dumps(data, indent=2)


def tree_to_dot(tree: ChaseTree) -> str:
    lines = ["digraph chase_tree {", "  node [shape=box, fontname=monospace];"]
    for n in tree.nodes:
        label = "\\n".join(sorted(map(str, n.added)))
        lines.append(f'  t{n.id} [label="#{n.id} {n.status}\\n{label}"];')
        if n.parent is not None:
            lines.append(f"  t{n.parent} -> t{n.id};")
    lines.append("}")
    return "\n".join(lines) + "\n"
