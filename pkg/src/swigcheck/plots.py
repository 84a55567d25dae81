"""Figure rendering for sweeps and risk-plane curves.

Figures are drawn off-screen and written straight to files, so rendering
works in headless environments and never touches a display.
"""

from __future__ import annotations

from typing import Sequence

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .inference import LabbeCurve, SweepPoint


def render_sweep(points: Sequence[SweepPoint], path: str, title: str = "") -> None:
    """Marginal odds ratio and risk ratio against covariate prevalence."""
    fig = Figure(figsize=(7.0, 4.5))
    FigureCanvasAgg(fig)
    ax = fig.subplots()
    xs = [pt.p for pt in points]
    ax.plot(xs, [pt.or_value for pt in points], label="odds ratio", color="#b33")
    ax.plot(xs, [pt.rr_value for pt in points], label="risk ratio", color="#36b")
    ax.plot(
        xs,
        [pt.or_null for pt in points],
        label="null",
        color="#777",
        linestyle="--",
        linewidth=1,
    )
    ax.set_xlabel("covariate prevalence")
    ax.set_ylabel("marginal association")
    ax.set_xlim(0.0, 1.0)
    if title:
        ax.set_title(title)
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)


def render_labbe(curves: Sequence[LabbeCurve], path: str, title: str = "") -> None:
    """Treated-versus-untreated risk plane with constant-measure curves."""
    fig = Figure(figsize=(5.5, 5.5))
    FigureCanvasAgg(fig)
    ax = fig.subplots()
    for curve in curves:
        xs = [p0 for p0, _ in curve.points]
        ys = [p1 for _, p1 in curve.points]
        if curve.scale is None:
            ax.plot(xs, ys, color="#777", linestyle="--", linewidth=1, label=curve.label)
        else:
            ax.plot(xs, ys, label=curve.label)
    ax.set_xlabel("risk untreated")
    ax.set_ylabel("risk treated")
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.0)
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
