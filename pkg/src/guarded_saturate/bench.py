"""Smoke benchmarks: fixed-rule answering time versus database size, and closure sizes."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .evaluation import answer_ucq, datalog_eval
from .randomgen import random_case
from .saturate_gtgd import SaturationLimit, gsat, ssat
from .terms import Atom, Const, Query, set_widths
from .textio import parse_rules

BENCH_RULES = """
E(X1,X2) -> exists Y. F(X2,Y).
F(X1,X2) -> G(X1).
E(X1,X2), G(X2) -> H(X1,X2).
H(X1,X2) -> exists Y. K(X1,X2,Y).
K(X1,X2,X3) -> G(X1).
"""


@dataclass
class ScalingPoint:
    constants: int
    facts: int
    derived: int
    seconds: float


def bench_database(c: int, seed: int = 0) -> set:
    """About ``2c`` random edges over ``c`` constants."""
    rng = np.random.Generator(np.random.PCG64([seed, c]))
    consts = [Const(f"c{i}") for i in range(c)]
    edges = set()
    while len(edges) < 2 * c:
        i, j = rng.integers(c, size=2)
        edges.add(Atom("E", (consts[int(i)], consts[int(j)])))
    return edges


def scaling_benchmark(sizes=(4, 8, 16, 32), repeats: int = 5, seed: int = 0) -> tuple:
    """Answering time of the fixed rule set for each database size.

    Returns ``(points, slope, width)``: ``slope`` is the least-squares
    exponent of time against the number of constants on a log-log scale.
    """
    rules = parse_rules(BENCH_RULES)
    rewriting = gsat(rules).rules
    w = set_widths(rules)[2]
    points = []
    for c in sizes:
        db = bench_database(c, seed)
        q = Query.make([[Atom("G", (Const("c0"),))]])
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            model = datalog_eval(db, rewriting)
            answer_ucq(model, q)
            times.append(time.perf_counter() - t0)
        points.append(ScalingPoint(c, len(db), len(model) - len(db), float(np.median(times))))
    x = np.log([p.constants for p in points])
    y = np.log([p.seconds for p in points])
    slope = float(np.polyfit(x, y, 1)[0])
    return points, slope, w


@dataclass
class ClosurePoint:
    index: int
    rules: int
    algo: str
    closure: int
    output: int
    log2_bound: float
    seconds: float
    truncated: bool


def closure_sizes(n: int = 50, seed: int = 7, sat_inferences: int | None = 4000) -> list:
    out = []
    for i in range(n):
        case = random_case(seed, i)
        for algo in ("gsat", "ssat"):
            truncated = False
            try:
                res = gsat(case.rules) if algo == "gsat" else ssat(case.rules, max_inferences=sat_inferences)
            except SaturationLimit as e:
                res, truncated = e.partial, True
            s = res.stats
            if algo == "gsat":
                bound = s["n"] * (s["w_b"] ** s["a"] + s["w_h"] ** s["a"])
            else:
                bound = 2 * s["n"] * s["w"] ** s["a"]
            out.append(ClosurePoint(i, len(case.rules), algo, s["closure_size"], s["output_size"],
                                    float(bound), s["seconds"], truncated))
    return out


def write_csv(path: Path, rows: list):
    rows = list(rows)
    with open(path, "w", newline="") as fh:
        if not rows:
            return
        writer = csv.DictWriter(fh, fieldnames=list(vars(rows[0])))
        writer.writeheader()
        for r in rows:
            writer.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in vars(r).items()})


def fits_bound(closure: int, log2_bound: float) -> bool:
    return closure == 0 or math.log2(closure) <= log2_bound
