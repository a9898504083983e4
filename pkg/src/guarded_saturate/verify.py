"""Oracle cross-checks for rewritings.

Every check compares a saturation result against an independent route:

* soundness: each derived rule is re-proved by chasing its frozen body
  with the input rules;
* completeness: every ground atom the bounded chase derives from a database
  is also answered yes by the rewriting;
* agreement: SSat and GSat give the same fixpoint;
* eval: the SAT solvers agree with world enumeration and Datalog evaluation
  ignores rule and fact order;
* shape: saturation never raised a shape violation.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chase import certain_facts, chase, disjunctive_chase
from .evaluation import (
    brute_force_satisfiable,
    datalog_eval,
    disdatalog_entails,
    dpll_satisfiable,
    ground_clauses,
    resolution_unsat,
)
from .normal_forms import shnf
from .randomgen import RandomCase, RandomParams, random_case
from .saturate_disgtgd import dgsat
from .saturate_gtgd import SaturationLimit, ShapeViolation, gsat, ssat
from .terms import Atom, Const, Query, Rule, constants_of, predicates, rules_atoms
from .textio import format_rule

CHECKS = ("soundness", "completeness", "agreement", "eval", "shape")


@dataclass
class Budgets:
    chase_steps: int = 10000
    tree_nodes: int = 5000
    sat_inferences: int | None = 4000
    sat_rules: int | None = 2000
    brute_atoms: int = 12


@dataclass
class CheckTally:
    passed: int = 0
    failed: int = 0
    skipped: int = 0
    failures: list = field(default_factory=list)

    def ok(self, n: int = 1):
        self.passed += n

    def fail(self, message: str):
        self.failed += 1
        self.failures.append(message)

    def merge(self, other: "CheckTally"):
        self.passed += other.passed
        self.failed += other.failed
        self.skipped += other.skipped
        self.failures.extend(other.failures)


@dataclass
class CaseOutcome:
    label: str
    tallies: dict
    stats: list = field(default_factory=list)


@dataclass
class VerifyReport:
    header: dict
    tallies: dict
    outcomes: list

    @property
    def ok(self) -> bool:
        return all(t.failed == 0 for t in self.tallies.values())


# ---------------------------------------------------------------- rule soundness

def freeze(rule: Rule) -> tuple:
    """Frozen body as facts and the head as a ground query."""
    sub = {v: Const(f"_k{i}") for i, v in
           enumerate(sorted(rule.body_vars(), key=lambda v: v.name), start=1)}
    body = {Atom(a.pred, tuple(sub.get(t, t) for t in a.args)) for a in rule.body}
    disjuncts = [[Atom(a.pred, tuple(sub.get(t, t) for t in a.args)) for a in c.atoms]
                 for c in rule.head]
    return body, Query.make(disjuncts)


def confirm_rule(rule: Rule, sigma: list, disjunctive: bool, budgets: Budgets) -> str:
    """``yes`` if the chase of the frozen body proves the head, else ``no``/``unknown``."""
    body, q = freeze(rule)
    if disjunctive:
        return disjunctive_chase(body, sigma, q, node_budget=budgets.tree_nodes).status
    return chase(body, sigma, budget=budgets.chase_steps, query=q).status


def _check_sound(rules: list, sigma: list, disjunctive: bool, budgets: Budgets,
                 tally: CheckTally, tag: str):
    for r in rules:
        status = confirm_rule(r, sigma, disjunctive, budgets)
        if status == "yes":
            tally.ok()
        else:
            tally.fail(f"{tag}: rule {format_rule(r)} not confirmed by the chase ({status})")


def inject_unsound(rewriting: list, sigma: list, disjunctive: bool, budgets: Budgets) -> Rule:
    """A full rule over the input schema that the chase refutes."""
    arities = predicates(rules_atoms(sigma))
    base = next(iter(sorted(sigma, key=format_rule)))
    body = base.body
    xs = sorted(base.body_vars(), key=lambda v: v.name)
    for pred in sorted(arities):
        for args in itertools.product(xs, repeat=arities[pred]):
            cand = Rule.make(body, [[Atom(pred, args)]])
            if cand in rewriting:
                continue
            if confirm_rule(cand, sigma, disjunctive, Budgets(200, 200)) == "no":
                return cand
    return Rule.make(body, [[Atom("Injected", tuple(xs))]])


# ---------------------------------------------------------------- completeness

def _ground_atoms(arities: dict, consts: list) -> list:
    out = []
    for pred in sorted(arities):
        for args in itertools.product(consts, repeat=arities[pred]):
            out.append(Atom(pred, args))
    return out


def _check_complete_tgd(db: set, sigma: list, model: set, budgets: Budgets, tally: CheckTally,
                        tag: str):
    consts = constants_of(db)
    run = chase(db, sigma, budget=budgets.chase_steps)
    proved = {f for f in run.instance if set(f.args) <= consts}
    for f in sorted(proved, key=str):
        if f in model:
            tally.ok()
        else:
            tally.fail(f"{tag}: chase proves {f} but the rewriting does not")
    if run.fixpoint:
        for f in sorted(model - proved, key=str):
            if not f.pred.startswith("_"):
                tally.fail(f"{tag}: rewriting derives {f} but the chase fixpoint lacks it")


def _check_complete_dis(db: set, sigma: list, rewriting: list, budgets: Budgets,
                        tally: CheckTally, tag: str):
    consts = sorted(constants_of(db), key=lambda c: c.name)
    atoms = _ground_atoms(_schema(sigma, db), consts)
    tree = disjunctive_chase(db, sigma, None, node_budget=budgets.tree_nodes)
    if tree.status == "complete":
        certain = certain_facts(tree)
        for a in atoms:
            entailed = disdatalog_entails(db, rewriting, Query.make([[a]]))
            if entailed == (a in certain):
                tally.ok()
            elif a in certain:
                tally.fail(f"{tag}: chase proves {a} but the rewriting does not")
            else:
                tally.fail(f"{tag}: rewriting entails {a} but a chase leaf is a countermodel")
        return
    for a in atoms:
        q = Query.make([[a]])
        status = disjunctive_chase(db, sigma, q, node_budget=budgets.tree_nodes).status
        if status == "unknown":
            tally.skipped += 1
            continue
        entailed = disdatalog_entails(db, rewriting, q)
        if entailed == (status == "yes"):
            tally.ok()
        else:
            tally.fail(f"{tag}: chase says {status} for {a}, rewriting says {entailed}")


def _schema(sigma: list, db: set) -> dict:
    return {p: k for p, k in predicates(itertools.chain(rules_atoms(sigma), db)).items()
            if not p.startswith("_")}


# ---------------------------------------------------------------- eval oracles

def _check_eval_tgd(db: set, rewriting: list, rng: np.random.Generator, tally: CheckTally,
                    tag: str):
    reference = datalog_eval(db, rewriting, method="naive")
    facts = sorted(db, key=str)
    for _ in range(3):
        rules = [rewriting[i] for i in rng.permutation(len(rewriting))]
        order = [facts[i] for i in rng.permutation(len(facts))]
        if datalog_eval(order, rules) == reference:
            tally.ok()
        else:
            tally.fail(f"{tag}: Datalog fixpoint depends on rule or fact order")


def _check_eval_dis(db: set, rewriting: list, atoms: list, budgets: Budgets, tally: CheckTally,
                    tag: str):
    for a in atoms:
        clauses = ground_clauses(db, rewriting, Query.make([[a]]))
        n_atoms = len({x for c in clauses for x in c.negatives | c.positives})
        if n_atoms > budgets.brute_atoms:
            tally.skipped += 1
            continue
        brute = not brute_force_satisfiable(clauses)
        dpll = not dpll_satisfiable(clauses)
        res = resolution_unsat(clauses)
        if brute == dpll == res:
            tally.ok()
        else:
            tally.fail(f"{tag}: solvers disagree on {a} (enumeration {brute}, dpll {dpll}, "
                       f"resolution {res})")


# ---------------------------------------------------------------- per case

def check_case(case: RandomCase, budgets: Budgets | None = None, inject: bool = False,
               label: str | None = None) -> CaseOutcome:
    budgets = budgets or Budgets()
    label = label or f"case {case.index}"
    tallies = {name: CheckTally() for name in CHECKS}
    stats = []
    sigma = list(case.rules)
    db = set(case.database)
    rng = np.random.Generator(np.random.PCG64([case.seed, case.index, 1]))
    if case.disjunctive:
        truncated = False
        try:
            res = dgsat(sigma, max_rules=budgets.sat_rules, max_inferences=budgets.sat_inferences)
            tallies["shape"].ok(res.stats["shape_checks"])
        except SaturationLimit as e:
            tallies["shape"].ok(e.partial.stats["shape_checks"])
            res, truncated = e.partial, True
            res.stats["truncated"] = True
        except ShapeViolation as e:
            tallies["shape"].fail(f"{label}: {e}")
            return CaseOutcome(label, tallies, stats)
        stats.append(("dgsat", res.stats))
        single, _ = shnf(sigma)
        rewriting = list(res.rules)
        if inject:
            rewriting.append(inject_unsound(rewriting, single, True, budgets))
        _check_sound(rewriting, single, True, budgets, tallies["soundness"], f"{label} dgsat")
        if db:
            if truncated:
                # a partial rewriting need not be complete
                tallies["completeness"].skipped += 1
            else:
                _check_complete_dis(db, sigma, rewriting, budgets, tallies["completeness"], label)
            atoms = _ground_atoms(_schema(sigma, db),
                                  sorted(constants_of(db), key=lambda c: c.name))
            _check_eval_dis(db, rewriting, atoms, budgets, tallies["eval"], label)
        return CaseOutcome(label, tallies, stats)

    results = {}
    for name, algo in (("gsat", gsat), ("ssat", ssat)):
        try:
            if name == "ssat":
                res = ssat(sigma, max_rules=budgets.sat_rules,
                           max_inferences=budgets.sat_inferences)
            else:
                res = algo(sigma)
            tallies["shape"].ok(res.stats["shape_checks"])
        except SaturationLimit as e:
            tallies["shape"].ok(e.partial.stats["shape_checks"])
            tallies["agreement"].skipped += 1
            res = e.partial
            res.stats["truncated"] = True
        except ShapeViolation as e:
            tallies["shape"].fail(f"{label} {name}: {e}")
            continue
        stats.append((name, res.stats))
        results[name] = res
    for name, res in results.items():
        rewriting = list(res.rules)
        if inject and name == "gsat":
            rewriting.append(inject_unsound(rewriting, sigma, False, budgets))
        _check_sound(rewriting, sigma, False, budgets, tallies["soundness"], f"{label} {name}")
    if "gsat" in results and db:
        g = list(results["gsat"].rules)
        model = datalog_eval(db, g)
        _check_complete_tgd(db, sigma, model, budgets, tallies["completeness"], label)
        _check_eval_tgd(db, g, rng, tallies["eval"], label)
        s = results.get("ssat")
        if s is not None and not s.stats.get("truncated"):
            if datalog_eval(db, s.rules) == model:
                tallies["agreement"].ok()
            else:
                tallies["agreement"].fail(f"{label}: SSat and GSat fixpoints differ")
    return CaseOutcome(label, tallies, stats)


def _run_random(args: tuple) -> CaseOutcome:
    seed, index, disjunctive, params, budgets, inject = args
    case = random_case(seed, index, disjunctive, params)
    return check_case(case, budgets, inject)


def verify_random(n: int, seed: int, disjunctive: bool = False, params: RandomParams | None = None,
                  budgets: Budgets | None = None, jobs: int = 1, inject: bool = False) -> VerifyReport:
    params = params or (RandomParams(max_rules=3) if disjunctive else RandomParams())
    budgets = budgets or Budgets()
    work = [(seed, i, disjunctive, params, budgets, inject) for i in range(n)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_random, work))
    else:
        outcomes = [_run_random(w) for w in work]
    header = {"class": "disgtgd" if disjunctive else "gtgd", "random": n, "seed": seed,
              **params.as_dict()}
    return _collect(header, outcomes)


def verify_program(rules: list, database: set, disjunctive: bool, budgets: Budgets | None = None,
                   inject: bool = False, label: str = "input") -> VerifyReport:
    case = RandomCase(0, 0, list(rules), set(database), disjunctive)
    outcome = check_case(case, budgets, inject, label)
    return _collect({"class": "disgtgd" if disjunctive else "gtgd", "input": label}, [outcome])


def _collect(header: dict, outcomes: list) -> VerifyReport:
    tallies = {name: CheckTally() for name in CHECKS}
    for o in outcomes:
        for name, t in o.tallies.items():
            tallies[name].merge(t)
    return VerifyReport(header, tallies, outcomes)
