"""Report figures. Rendered off-screen through the Agg canvas; no pyplot state."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from pathlib import Path

import matplotlib as mpl
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .analytics import FitResult
from .model import CobbDouglasModel, FeatureVector, elasticity_grid, mean_score

REPORT_RC = {
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "path.simplify": False,
}

FIT_STYLE = {
    "linear": ("tab:blue", "-"),
    "polynomial": ("tab:orange", "--"),
    "exponential": ("tab:purple", "-."),
    "svr": ("tab:green", ":"),
}


def golden_size(width: float = 5.0) -> tuple[float, float]:
    return width, width * (np.sqrt(5.0) - 1.0) / 2.0


def _save(fig: Figure, path: str | Path) -> Path:
    path = Path(path)
    FigureCanvasAgg(fig)
    # no Software/date chunks, so re-renders are byte-identical
    fig.savefig(path, format="png", metadata={"Software": None})
    return path


def regression_figure(
    x: Sequence[float],
    y: Sequence[float],
    fits: Sequence[FitResult],
    path: str | Path,
    xlabel: str = "x",
    ylabel: str = "y",
    title: str | None = None,
) -> Path:
    """Scatter of the data with each fitted curve over the observed x range."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with mpl.rc_context(REPORT_RC):
        fig = Figure(figsize=golden_size())
        ax = fig.add_subplot(1, 1, 1)
        ax.scatter(x, y, s=12, color="0.3", zorder=3, label="journals")
        grid = np.linspace(x.min(), x.max(), 200) if x.size else np.array([])
        for fit in fits:
            color, ls = FIT_STYLE.get(fit.kind, ("black", "-"))
            ax.plot(grid, fit.predict(grid), color=color, linestyle=ls,
                    label=f"{fit.kind} (R²={fit.r_squared:.3f}, RMSE={fit.rmse:.3f})")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend(frameon=False, loc="best")
        fig.tight_layout()
        return _save(fig, path)


def cross_correlation_figure(xcorr: Mapping[int, float], path: str | Path, title: str | None = None) -> Path:
    lags = sorted(xcorr)
    with mpl.rc_context(REPORT_RC):
        fig = Figure(figsize=golden_size(4.0))
        ax = fig.add_subplot(1, 1, 1)
        ax.vlines(lags, 0, [xcorr[k] for k in lags], color="tab:blue")
        ax.plot(lags, [xcorr[k] for k in lags], "o", color="tab:blue")
        ax.axhline(0, color="0.5", linewidth=0.8)
        ax.set_ylim(-1.05, 1.05)
        ax.set_xticks(lags)
        ax.set_xlabel("lag")
        ax.set_ylabel("cross-correlation")
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)


def elasticity_profile_figure(
    table: Sequence[FeatureVector],
    model: CobbDouglasModel,
    bounds: tuple[float, float],
    step: float,
    path: str | Path,
    labels: Sequence[str] = ("x1 OCQ", "x2 ICR", "x3 SNIP", "x4 NLIQ"),
) -> Path:
    """Mean score as each elasticity sweeps its grid, the others held at the fitted values."""
    axis = sorted({p[0] for p in elasticity_grid(1, bounds, step, 0.0)})
    with mpl.rc_context(REPORT_RC):
        fig = Figure(figsize=golden_size())
        ax = fig.add_subplot(1, 1, 1)
        for i, label in enumerate(labels[: len(model.elasticities)]):
            ys = []
            for a in axis:
                alphas = list(model.elasticities)
                alphas[i] = a
                ys.append(mean_score(table, CobbDouglasModel(tuple(alphas), model.A)))
            ax.plot(axis, ys, marker="o", markersize=3, label=label)
        ax.set_xlabel("elasticity")
        ax.set_ylabel("mean internationality score")
        ax.legend(frameon=False, loc="best")
        fig.tight_layout()
        return _save(fig, path)
