"""PNG figures for growth reports.

Figures are drawn with the object-oriented Agg API (no pyplot state), so
rendering is safe off the main thread and never opens a window.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .growth import BenoistGap, ConeReport, RatioTable

# fixed metadata keeps the files reproducible
_PNG_META = {"Software": "weyl-census"}


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    FigureCanvasAgg(fig)
    fig.savefig(path, format="png", dpi=100, metadata=_PNG_META)
    return path


def _shade_window(ax, window):
    ax.axvspan(window[0], window[1], color="0.92", zorder=0, label="fit window")


def _positive(v: np.ndarray) -> np.ndarray:
    return np.where(v > 0, v, np.nan)


def plot_ratio_table(table: RatioTable, path, *, rank: int = 1) -> Path:
    """Normalised counts against R (orbit) or t (classes), log scale."""
    fig = Figure(figsize=(6.4, 4.0))
    ax = fig.add_subplot()
    _shade_window(ax, table.window)
    upper, lower = _positive(table.ratio_upper), _positive(table.ratio_lower)
    if table.kind == "orbit":
        ax.plot(table.x, upper, "o-", ms=3, label=r"$N(R)\,e^{-\hat\delta R}$")
        ax.set_xlabel("R")
    else:
        ax.plot(table.x, upper, "o-", ms=3, label=r"$P(t)\,t\,e^{-\hat\delta t}$")
        if rank != 1:
            ax.plot(table.x, lower, "s-", ms=3,
                    label=rf"$P(t)\,t^{{{rank}}}\,e^{{-\hat\delta t}}$")
        ax.set_xlabel("t")
    if np.any(np.isfinite(upper)):
        ax.set_yscale("log")
    ax.set_ylabel("normalised count")
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    return _save(fig, path)


def plot_benoist(gap: BenoistGap, path) -> Path:
    fig = Figure(figsize=(6.4, 4.0))
    ax = fig.add_subplot()
    k = np.array(sorted(gap.per_length))
    ax.plot(k, [gap.per_length[i] for i in k], "o-")
    ax.axhline(gap.M_hat, ls="--", color="0.5", lw=1)
    ax.set_xlabel("word length")
    ax.set_ylabel(r"max $\|L(\gamma) - H(o,\gamma o)\|$")
    fig.tight_layout()
    return _save(fig, path)


def plot_cone(cone: ConeReport, path, max_points: int = 20000) -> Path:
    """Unit Cartan directions in the chamber plane (rank two only)."""
    dirs = cone.directions
    if len(dirs) > max_points:
        dirs = dirs[np.linspace(0, len(dirs) - 1, max_points).astype(int)]
    e1 = np.array([1.0, -1.0, 0.0]) / np.sqrt(2)
    e2 = np.array([1.0, 1.0, -2.0]) / np.sqrt(6)
    fig = Figure(figsize=(5.0, 5.0))
    ax = fig.add_subplot()
    ax.scatter(dirs @ e1, dirs @ e2, s=2, alpha=0.4)
    # chamber walls x1 = x2 and x2 = x3
    for wall in (np.array([1.0, 1.0, -2.0]), np.array([2.0, -1.0, -1.0])):
        w = wall / np.linalg.norm(wall)
        ax.plot([0, w @ e1], [0, w @ e2], "k-", lw=0.8)
    ax.set_aspect("equal")
    ax.set_title(f"limit cone sample, min wall gap {cone.min_wall_gap:.3g}", fontsize="small")
    fig.tight_layout()
    return _save(fig, path)
