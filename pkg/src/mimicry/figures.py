"""Matplotlib renderings of run reports, written next to the CSV/JSON outputs.

All figures are PNG with pinned metadata so identical runs produce identical
bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_PNG_METADATA = {"Software": "mimicry"}


def _save(fig, path) -> None:
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)


def score_histogram(scores, threshold: float, path) -> None:
    """Distribution of substitute scores with the decision threshold marked."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(scores, bins=40, range=(0.0, 1.0), color="#4878d0", edgecolor="white")
    ax.axvline(threshold, color="#d65f5f", linestyle="--", label=f"threshold = {threshold:.3f}")
    ax.set_xlabel("substitute score (probability of class 2)")
    ax.set_ylabel("samples")
    ax.set_title("Validation score distribution")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def active_comparison(rows, initial_d_max: float, path) -> None:
    """d_max against total labeled samples for active learning vs the benchmark."""
    fig, ax = plt.subplots(figsize=(6, 4))
    totals = [r["total_samples"] for r in rows]
    initial = rows[0]["initial_samples"] if rows else 0
    x = [initial] + totals
    active = [initial_d_max] + [max(r["d1_active"], r["d2_active"]) for r in rows]
    bench = [initial_d_max] + [max(r["d1_benchmark"], r["d2_benchmark"]) for r in rows]
    ax.plot(x, active, marker="o", label="active learning", color="#4878d0")
    ax.plot(x, bench, marker="s", label="random benchmark", color="#d65f5f")
    ax.set_xlabel("total labeled samples")
    ax.set_ylabel("max per-class disagreement with target")
    ax.set_title("Active learning vs random benchmark")
    ax.set_ylim(bottom=0)
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def poison_impact(report: dict, path) -> None:
    """Per-class and overall disagreement between the target before/after poisoning."""
    fig, ax = plt.subplots(figsize=(5, 4))
    keys = ["d1", "d2", "d_avg"]
    labels = ["class 1", "class 2", "overall"]
    values = [report[k] for k in keys]
    ax.bar(labels, values, color=["#4878d0", "#6acc64", "#d65f5f"])
    ax.set_ylabel("label disagreement before vs after retrain")
    ax.set_title(f"Poisoning impact (p = {report['p']:g}%, {report['plan_size']} flips)")
    ax.set_ylim(bottom=0)
    fig.tight_layout()
    _save(fig, path)
