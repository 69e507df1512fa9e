"""Matplotlib rendering for the CLI report paths.

Figures back the delimited outputs rather than replacing them: the fit
command draws the accuracy curves and the savings curves next to its JSON
and CSV, the toy trainer draws its loss trajectories.  The Agg backend is
forced and PNG metadata is stripped so identical inputs produce identical
bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

STYLE = {
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 130,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
}

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


def save_figure(fig, path) -> None:
    """Write a PNG with no variable metadata and close the figure."""
    fig.savefig(path, metadata={"Software": None}, bbox_inches="tight")
    plt.close(fig)


def fit_figure(points_by_technique: dict, models: dict):
    """Accuracy vs resources on a log axis, data points plus fitted curves."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for i, name in enumerate(sorted(points_by_technique)):
            pts = points_by_technique[name]
            color = _COLORS[i % len(_COLORS)]
            ms = np.asarray([p.m for p in pts])
            accs = np.asarray([p.accuracy for p in pts])
            ax.plot(ms, accs, "o", color=color, label=name, markersize=4)
            model = models.get(name)
            if model is not None:
                grid = np.geomspace(ms.min(), ms.max(), 200)
                ax.plot(grid, model.predict(grid), "-", color=color, linewidth=1.2)
                ax.axhline(model.a_inf, color=color, linewidth=0.7, linestyle=":")
        ax.set_xscale("log")
        ax.set_xlabel("resources m")
        ax.set_ylabel("accuracy")
        ax.legend()
        fig.tight_layout()
    return fig


def savings_figure(curves: dict):
    """Relative resource savings tau(m) per technique against the baseline."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for i, name in enumerate(sorted(curves)):
            rows = curves[name]
            ms = [row[0] for row in rows]
            taus = [row[2] for row in rows]
            ax.plot(ms, taus, "-o", color=_COLORS[i % len(_COLORS)],
                    label=name, markersize=3, linewidth=1.2)
        ax.set_xscale("log")
        ax.set_ylim(0.0, 1.05)
        ax.set_xlabel("resources m")
        ax.set_ylabel("relative savings")
        ax.legend()
        fig.tight_layout()
    return fig


def training_figure(report: dict):
    """Loss per epoch for every sweep entry, test accuracies in the legend."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for i, entry in enumerate(report["sweep"]):
            acc = entry["test"]["sci"]["exact_accuracy"]
            label = f"lambda={entry['lambda']:g} (test sci {acc:.3f})"
            ax.plot(entry["epoch_losses"], color=_COLORS[i % len(_COLORS)],
                    label=label, linewidth=1.2)
        ax.set_xlabel("epoch")
        ax.set_ylabel("mean training loss")
        ax.legend()
        fig.tight_layout()
    return fig
