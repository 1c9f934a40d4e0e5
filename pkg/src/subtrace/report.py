"""Matplotlib figures for ratio reports and Weyl staircases.

Figures are written to files next to the CSV/JSON tables; nothing here is
interactive.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .asymptotics import RatioReport  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def figure_size(scale: float = 1.0) -> tuple[float, float]:
    golden = (5**0.5 - 1.0) / 2.0
    width = 6.0 * scale
    return width, width * golden * 1.4


def plot_ratio_report(report: RatioReport, path: str | Path, title: str | None = None) -> Path:
    """Two panels: computed vs asymptote on log-log axes, and their ratio."""
    path = Path(path)
    xs = [r.parameter for r in report.rows]
    with plt.rc_context(STYLE):
        fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=figure_size())
        if xs:
            top.loglog(xs, [r.computed for r in report.rows], "o-", label="computed")
            top.loglog(xs, [r.asymptote for r in report.rows], "k--", label="asymptote")
            bottom.semilogx(xs, [r.ratio for r in report.rows], "s-", color="C3")
            top.legend(loc="best")
        bottom.axhline(1.0, color="k", lw=0.8)
        top.set_ylabel("trace" if report.mode == "trace" else "count")
        bottom.set_ylabel("ratio")
        bottom.set_xlabel("t" if report.mode == "trace" else r"$\lambda$")
        label = title or " / ".join(str(v) for v in (report.meta.get("manifold"), report.meta.get("psi")) if v)
        slope = report.fitted_slope
        if slope is not None:
            label = f"{label}  slope {slope:.4f}"
            if report.target_slope is not None:
                label += f" (target {report.target_slope:.4f})"
        if report.divergent:
            label += f"  [{len(report.divergent)} divergent]"
        top.set_title(label)
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_staircase(breakpoints, cumulative, asymptote, path: str | Path, title: str = "") -> Path:
    """Counting staircase with its Weyl curve."""
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figure_size(0.8))
        ax.step(breakpoints, cumulative, where="post", label="N")
        ax.plot(breakpoints, [asymptote(x) for x in breakpoints], "k--", label="Weyl")
        ax.set_xlabel(r"$\lambda$")
        ax.set_ylabel("count")
        ax.set_title(title)
        ax.legend(loc="best")
        fig.savefig(path)
        plt.close(fig)
    return path
