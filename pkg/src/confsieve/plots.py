"""Figure rendering for the report-producing commands.

matplotlib is imported lazily with the Agg backend so headless runs and
library users who never plot pay nothing.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def plot_roc(points, out_path) -> Path:
    """Render ROC operating points (fpr vs tpr) with threshold labels."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    xs = [p.fpr for p in points]
    ys = [p.tpr for p in points]
    ax.plot(xs, ys, marker="o", color="tab:blue", linewidth=1.2)
    for p in points:
        ax.annotate(
            f"{p.threshold:g}",
            (p.fpr, p.tpr),
            textcoords="offset points",
            xytext=(6, -4),
            fontsize=8,
        )
    ax.plot([0, 1], [0, 1], linestyle=":", color="gray", linewidth=0.8)
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title("score threshold operating points")
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def plot_lifetime_cdf(lifetimes: Sequence[float], out_path) -> Path:
    """Render the cumulative distribution of entry lifetimes."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    values = sorted(lifetimes)
    fractions = [(i + 1) / len(values) for i in range(len(values))]
    ax.step([0.0] + values, [0.0] + fractions, where="post", color="tab:green")
    ax.set_xlim(0.0, 1.02)
    ax.set_ylim(0.0, 1.02)
    ax.set_xlabel("entry lifetime (fraction of versions present)")
    ax.set_ylabel("cumulative fraction of entries")
    ax.set_title("data entry lifetime distribution")
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path
