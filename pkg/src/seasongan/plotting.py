from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .placerec import PRCurve  # noqa: E402


def plot_pr_curves(curves: list[PRCurve], path):
    """Write a vector plot with one precision-recall line per sequence length.

    Returns the figure's axes so callers can inspect the plotted data.
    """
    if not curves:
        raise ValueError("need at least one PR curve to plot")
    fig, ax = plt.subplots(figsize=(5, 4))
    for c in curves:
        ax.plot(c.recall, c.precision, marker="." if len(c.recall) == 1 else None, label=f"n = {c.sequence_length}")
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel("Recall")
    ax.set_ylabel("Precision")
    ax.legend(loc="lower left")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return ax
