"""Report figures rendered to SVG next to the delimited output.

SVGs are text: fonts stay as <text> elements (svg.fonttype none) so the
numbers in a confusion-matrix heatmap can be re-parsed and checked against
the serialized counts, and the hash salt and empty Date metadata keep the
bytes stable across runs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .learners.tree import FeatureImportance
from .metrics import ConfusionMatrix

matplotlib.rcParams["svg.fonttype"] = "none"
matplotlib.rcParams["svg.hashsalt"] = "claimbench"

_SVG_META = {"Date": None}


def render_confusion_svg(cm: ConfusionMatrix, title: str, path) -> None:
    """2x2 heatmap with count labels, rows = actual, columns = predicted."""
    grid = np.array([[cm.tp, cm.fn], [cm.fp, cm.tn]], dtype=float)
    labels = [[f"TP = {cm.tp}", f"FN = {cm.fn}"], [f"FP = {cm.fp}", f"TN = {cm.tn}"]]
    fig, ax = plt.subplots(figsize=(4.0, 3.4))
    ax.imshow(grid, cmap="Blues")
    for i in range(2):
        for j in range(2):
            shade = "white" if grid[i, j] > grid.max() / 2 else "black"
            ax.text(j, i, labels[i][j], ha="center", va="center", color=shade)
    ax.set_xticks([0, 1], ["predicted 1", "predicted 0"])
    ax.set_yticks([0, 1], ["actual 1", "actual 0"])
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def render_importance_svg(
    importance: FeatureImportance, title: str, path, top: int = 20
) -> None:
    """Horizontal bars of rolled-up importances, largest on top."""
    rolled = importance.rolled_up()
    order = np.argsort(-rolled.values, kind="stable")[:top]
    names = [rolled.names[i] for i in order]
    values = rolled.values[order]
    fig, ax = plt.subplots(figsize=(6.0, 0.35 * max(len(names), 4) + 1.2))
    pos = np.arange(len(names))
    ax.barh(pos, values, color="#4878a8")
    ax.set_yticks(pos, names)
    ax.invert_yaxis()
    ax.set_xlabel("importance")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
