"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 parse error, 3 unguarded
rule, 4 wrong algorithm for the rule class, 5 existential query given to
``answer``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .chase import (
    ChaseError,
    check_one_pass,
    chase,
    disjunctive_chase,
    run_to_dot,
    run_to_json,
    tree_to_dot,
    tree_to_json,
)
from .evaluation import NonGroundQueryError, answer_ucq, datalog_eval, disdatalog_entails
from .normal_forms import deskolemize, hnf, ifc, shnf, skolemize, vnf
from .saturate_disgtgd import check_query_predicates, dgsat
from .saturate_gtgd import SaturationLimit, ShapeViolation, check_guarded, gsat, ssat
from .terms import (
    ArityError,
    GuardedSaturateError,
    RuleClassError,
    UnguardedRuleError,
    is_full,
    is_guarded,
)
from .textio import ParseError, Program, format_query, format_rule, parse

EXIT_VERIFY, EXIT_PARSE, EXIT_UNGUARDED, EXIT_CLASS, EXIT_QUERY = 1, 2, 3, 4, 5


class _Style:
    def __init__(self, stream):
        self.on = os.environ.get("GS_COLOR", "1") != "0" and stream.isatty()

    def __call__(self, text: str, code: str) -> str:
        return f"\x1b[{code}m{text}\x1b[0m" if self.on else text

    def verdict(self, ok: bool) -> str:
        return self("pass", "32") if ok else self("FAIL", "31;1")


def _load(path: str, allow_skolem: bool = False) -> Program:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    try:
        return parse(text, allow_skolem=allow_skolem)
    except ParseError as e:
        raise ParseError(f"{path}:{e.line}:{e.col}: {e.message}", e.line, e.col) from None


def _is_disjunctive(rules: list) -> bool:
    return any(len(r.head) > 1 for r in rules)


def _pick_algo(algo: str, rules: list) -> str:
    disjunctive = _is_disjunctive(rules)
    if algo == "auto":
        return "dgsat" if disjunctive else "gsat"
    if disjunctive and algo != "dgsat":
        raise RuleClassError(f"{algo} handles TGDs only; use --algo dgsat for disjunctive rules")
    return algo


def _saturate(rules: list, algo: str, subsume: bool, max_rules: int | None = None):
    if algo == "ssat":
        return ssat(rules, subsume=subsume, max_rules=max_rules)
    if algo == "gsat":
        return gsat(rules, subsume=subsume)
    return dgsat(rules, subsume=subsume)


def _public_stats(stats: dict) -> dict:
    return {k: v for k, v in stats.items() if k != "seconds"}


# ---------------------------------------------------------------- saturate

def cmd_saturate(args, out) -> int:
    prog = _load(args.file, args.allow_skolem)
    algo = _pick_algo(args.algo, prog.rules)
    res = _saturate(prog.rules, algo, args.subsume, args.max_rules)
    lines = [format_rule(r) for r in res.rules]
    stats = _public_stats(res.stats)
    stats.update(algo=algo, input_rules=len(prog.rules))
    if args.format == "json":
        out.write(json.dumps({"rules": lines, "stats": stats}, indent=2, default=list) + "\n")
    else:
        out.writelines(line + "\n" for line in lines)
        out.write(f"% {algo}: {len(prog.rules)} input rules, {stats['output_size']} output rules, "
                  f"closure {stats['closure_size']}, iterations {stats['iterations']}\n")
    print(f"{algo}: {res.stats['seconds']:.3f} s", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- answer

def cmd_answer(args, out) -> int:
    prog = _load(args.file)
    for i, q in enumerate(prog.queries, start=1):
        if not q.is_ground():
            raise NonGroundQueryError(f"Q{i} {format_query(q)} has existential variables; "
                                      f"use the chase command for it")
    rules = prog.rules
    disjunctive = _is_disjunctive(rules)
    if rules and not all(is_full(r) for r in rules):
        algo = _pick_algo(args.algo, rules)
        res = _saturate(rules, algo, args.subsume)
        if algo == "dgsat":
            for q in prog.queries:
                check_query_predicates(q, res.stats.get("fresh_predicates", ()))
        rules = res.rules
    results = {}
    if disjunctive or any(len(r.head) > 1 for r in rules):
        for i, q in enumerate(prog.queries, start=1):
            results[i] = disdatalog_entails(prog.database, rules, q, method=args.method)
    else:
        model = datalog_eval(prog.database, rules, method=args.eval)
        for i, q in enumerate(prog.queries, start=1):
            results[i] = answer_ucq(model, q)
    if args.format == "json":
        out.write(json.dumps({f"Q{i}": v for i, v in results.items()}, indent=2) + "\n")
    else:
        for i, v in results.items():
            out.write(f"Q{i}: {'yes' if v else 'no'}\n")
    return 0


# ---------------------------------------------------------------- chase

def _write_trace(text: str, target: str | None, index: int, total: int, out):
    if target is None:
        out.write(text if text.endswith("\n") else text + "\n")
        return
    path = Path(target)
    if total > 1:
        path = path.with_name(f"{path.stem}.q{index}{path.suffix}")
    path.write_text(text if text.endswith("\n") else text + "\n")


def cmd_chase(args, out) -> int:
    prog = _load(args.file)
    rules = prog.rules
    queries = list(prog.queries) or [None]
    disjunctive = _is_disjunctive(rules)
    traces = []
    report = []
    for i, q in enumerate(queries, start=1):
        name = f"Q{i}" if q is not None else "chase"
        if disjunctive:
            tree = disjunctive_chase(prog.database, rules, q, node_budget=args.nodes)
            size = tree.size()
            text = {
                "yes": f"yes (tree of {size} nodes)",
                "no": "no (fixpoint)",
                "complete": f"complete ({size} nodes, {len(tree.leaves())} leaves)",
                "unknown": f"unknown (node budget {args.nodes} exhausted)",
            }[tree.status]
            report.append({"query": name, "status": tree.status, "nodes": size})
            if args.format == "text":
                out.write(f"{name}: {text}\n")
            if args.emit:
                traces.append(tree_to_json(tree, rules) if args.emit == "json" else tree_to_dot(tree))
            continue
        track = args.one_pass or args.emit is not None
        track = track and all(is_guarded(r) for r in rules)
        run = chase(prog.database, rules, mode=args.mode, budget=args.budget, track_tree=track,
                    query=q, propagation=args.propagation)
        n = len(run.steps)
        status = run.status or ("fixpoint" if run.fixpoint else "unknown")
        text = {
            "yes": f"yes ({n} steps)",
            "no": "no (fixpoint)",
            "fixpoint": f"fixpoint ({n} steps, {len(run.instance)} facts)",
            "unknown": f"unknown (budget {args.budget} steps exhausted)",
        }[status]
        entry = {"query": name, "status": status, "steps": n}
        lines = [f"{name}: {text}"]
        if args.one_pass:
            if run.has_tree:
                res = check_one_pass(run)
                entry["one_pass"] = res.one_pass
                msg = "true" if res.one_pass else "false"
                if res.violation:
                    v, j, k = res.violation
                    msg += f" (node v{v}: step {j} fired outside it, step {k} modified it)"
                lines.append(f"one-pass: {msg}")
            else:
                entry["one_pass"] = None
                lines.append("one-pass: n/a (rules are not guarded)")
        report.append(entry)
        if args.format == "text":
            out.writelines(line + "\n" for line in lines)
        if args.emit:
            traces.append(run_to_json(run) if args.emit == "json" else run_to_dot(run))
    if args.format == "json":
        out.write(json.dumps(report, indent=2) + "\n")
    for i, t in enumerate(traces, start=1):
        _write_trace(t, args.trace, i, len(traces), out)
    return 0


# ---------------------------------------------------------------- verify

def cmd_verify(args, out) -> int:
    from .randomgen import DISJUNCTIVE_PARAMS, RandomParams
    from .verify import CHECKS, Budgets, verify_program, verify_random

    budgets = Budgets(args.chase_budget, args.tree_budget, args.sat_budget)
    if args.random:
        disjunctive = args.cls == "disgtgd"
        params = DISJUNCTIVE_PARAMS if disjunctive else RandomParams()
        report = verify_random(args.random, args.seed, disjunctive, params, budgets, args.jobs,
                               args.inject_unsound)
    elif args.file:
        prog = _load(args.file)
        check_guarded(prog.rules)
        report = verify_program(prog.rules, prog.database, _is_disjunctive(prog.rules), budgets,
                                args.inject_unsound, label=args.file)
    else:
        raise SystemExit("verify needs an input file or --random N")
    style = _Style(out)
    if args.format == "json":
        data = {"header": report.header, "ok": report.ok,
                "checks": {k: {"passed": t.passed, "failed": t.failed, "skipped": t.skipped,
                               "failures": t.failures} for k, t in report.tallies.items()}}
        out.write(json.dumps(data, indent=2) + "\n")
    else:
        h = report.header
        out.write("verify: " + " ".join(f"{k}={v}" for k, v in h.items()
                                        if k in ("class", "input", "random", "seed")) + "\n")
        if "random" in h:
            out.write(f"limits: predicates<={h['predicates']} arity<={h['max_arity']} "
                      f"rules<={h['max_rules']} width<={h['max_width']} facts<={h['max_facts']}\n")
        for name in CHECKS:
            t = report.tallies[name]
            line = f"  {name:<13} {style.verdict(t.failed == 0)}  {t.passed} passed, {t.failed} failed"
            if t.skipped:
                line += f", {t.skipped} skipped"
            out.write(line + "\n")
        cut = [f"{o.label} {algo}" for o in report.outcomes for algo, st in o.stats
               if st.get("truncated")]
        if cut:
            out.write(f"  budget: {len(cut)} saturation(s) stopped early, partial closures "
                      f"checked for soundness only ({', '.join(cut[:8])}"
                      f"{', ...' if len(cut) > 8 else ''})\n")
        for name in CHECKS:
            for msg in report.tallies[name].failures[:20]:
                out.write(f"  - {msg}\n")
        out.write(f"result: {style.verdict(report.ok)}\n")
    return 0 if report.ok else EXIT_VERIFY


# ---------------------------------------------------------------- normalize

def cmd_normalize(args, out) -> int:
    prog = _load(args.file, args.allow_skolem)
    rules = prog.rules
    form = args.form
    if form == "vnf":
        result = [vnf(r) for r in rules]
    elif form == "hnf":
        result = [vnf(r) for r in hnf(rules)]
    elif form == "shnf":
        result, _ = shnf(rules)
    elif form == "skolem":
        single, _ = shnf(rules)
        result, _ = skolemize(single)
    elif form == "deskolem":
        result = [deskolemize(r) for r in rules]
    else:
        result = [x for x in (ifc(r) for r in rules) if x is not None]
    out.writelines(format_rule(r) + "\n" for r in result)
    return 0


# ---------------------------------------------------------------- bench

def cmd_bench(args, out) -> int:
    from .bench import closure_sizes, fits_bound, scaling_benchmark, write_csv
    from .plotting import plot_closure_sizes, plot_scaling

    report = Path(args.report_dir)
    report.mkdir(parents=True, exist_ok=True)
    sizes = tuple(int(s) for s in args.sizes.split(","))
    points, slope, w = scaling_benchmark(sizes, repeats=args.repeats, seed=args.seed)
    write_csv(report / "scaling.csv", points)
    plot_scaling(points, slope, w, report / "scaling.png")
    closure = closure_sizes(args.programs, args.seed, args.sat_budget)
    write_csv(report / "closure_sizes.csv", closure)
    plot_closure_sizes(closure, report / "closure_sizes.png")
    over = [p for p in closure if not fits_bound(p.closure, p.log2_bound)]
    truncated = sum(p.truncated for p in closure)
    out.write(f"scaling: slope {slope:.2f} over c in {list(sizes)} (bound w+1 = {w + 1})\n")
    out.write(f"closures: {len(closure)} runs, {len(over)} above their size bound, "
              f"{truncated} stopped at the inference budget\n")
    out.write(f"report written to {report}\n")
    return 0


# ---------------------------------------------------------------- entry point

def _positive(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="guarded-saturate",
                                description="Rewrite guarded rules into Datalog and answer queries.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, algo=True):
        sp.add_argument("--format", choices=("text", "json"), default="text")
        if algo:
            sp.add_argument("--algo", choices=("auto", "ssat", "gsat", "dgsat"), default="auto")
            sp.add_argument("--subsume", action="store_true",
                            help="drop output rules subsumed by other output rules")

    sp = sub.add_parser("saturate", help="print an atomic rewriting")
    sp.add_argument("file")
    common(sp)
    sp.add_argument("--allow-skolem", action="store_true")
    sp.add_argument("--max-rules", type=_positive, default=None, help="SSat closure budget")
    sp.set_defaults(func=cmd_saturate)

    sp = sub.add_parser("answer", help="answer quantifier-free queries via the rewriting")
    sp.add_argument("file")
    common(sp)
    sp.add_argument("--method", choices=("dpll", "resolution", "brute"), default="dpll")
    sp.add_argument("--eval", choices=("seminaive", "naive"), default="seminaive")
    sp.set_defaults(func=cmd_answer)

    sp = sub.add_parser("chase", help="run the bounded chase oracle")
    sp.add_argument("file")
    common(sp, algo=False)
    sp.add_argument("--mode", choices=("restricted", "oblivious"), default="restricted")
    sp.add_argument("--budget", type=_positive, default=1000, help="chase steps")
    sp.add_argument("--nodes", type=_positive, default=5000, help="chase tree nodes")
    sp.add_argument("--propagation", choices=("all", "ancestors"), default="all")
    sp.add_argument("--one-pass", action="store_true")
    sp.add_argument("--emit", choices=("dot", "json"))
    sp.add_argument("--trace", help="write traces here instead of stdout")
    sp.set_defaults(func=cmd_chase)

    sp = sub.add_parser("verify", help="cross-check rewritings against the chase")
    sp.add_argument("file", nargs="?")
    common(sp, algo=False)
    sp.add_argument("--random", type=_positive)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--class", dest="cls", choices=("gtgd", "disgtgd"), default="gtgd")
    sp.add_argument("--inject-unsound", action="store_true")
    sp.add_argument("--jobs", type=_positive, default=1)
    sp.add_argument("--chase-budget", type=_positive, default=10000)
    sp.add_argument("--tree-budget", type=_positive, default=5000)
    sp.add_argument("--sat-budget", type=_positive, default=4000,
                    help="inference budget for SSat and DGSat")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("normalize", help="print a normal form of the rules")
    sp.add_argument("file")
    sp.add_argument("--form", choices=("vnf", "hnf", "shnf", "skolem", "deskolem", "ifc"),
                    default="vnf")
    sp.add_argument("--allow-skolem", action="store_true")
    sp.set_defaults(func=cmd_normalize)

    sp = sub.add_parser("bench", help="scaling benchmark and closure sizes with figures")
    sp.add_argument("--report-dir", default="report")
    sp.add_argument("--sizes", default="4,8,16,32")
    sp.add_argument("--repeats", type=_positive, default=5)
    sp.add_argument("--programs", type=_positive, default=50)
    sp.add_argument("--seed", type=int, default=7)
    sp.add_argument("--sat-budget", type=_positive, default=4000,
                    help="inference budget for SSat and DGSat")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv: list | None = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (ParseError, ArityError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except UnguardedRuleError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_UNGUARDED
    except RuleClassError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CLASS
    except NonGroundQueryError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_QUERY
    except (SaturationLimit, ShapeViolation, ChaseError, GuardedSaturateError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
