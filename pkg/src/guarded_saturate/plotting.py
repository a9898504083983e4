"""Figures for the benchmark report."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_scaling(points: list, slope: float, width: int, path: Path):
    c = np.array([p.constants for p in points], dtype=float)
    t = np.array([p.seconds for p in points])
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(c, t, "o-", label=f"measured (slope {slope:.2f})")
    ref = t[0] * (c / c[0]) ** (width + 1)
    ax.loglog(c, ref, "--", color="grey", label=f"c^{width + 1} reference")
    ax.set_xlabel("database constants")
    ax.set_ylabel("answering time [s]")
    ax.set_title("Fixed rule set, growing database")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_closure_sizes(points: list, path: Path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for algo, marker in (("gsat", "o"), ("ssat", "s")):
        sel = [p for p in points if p.algo == algo]
        if not sel:
            continue
        x = [p.index for p in sel]
        ax.scatter(x, [max(p.closure, 1) for p in sel], marker=marker, s=18, label=f"{algo} closure")
        trunc = [p for p in sel if p.truncated]
        if trunc:
            ax.scatter([p.index for p in trunc], [p.closure for p in trunc], marker="x", color="red",
                       s=30, label=f"{algo} stopped at budget")
    ax.set_yscale("log")
    ax.set_xlabel("random program")
    ax.set_ylabel("rules in closure")
    ax.set_title("Saturation closure sizes")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
