"""Matplotlib renderings of the analysis data types.

These are the presentation companions to the byte-stable SVGs from
svgplot: same data, drawn with matplotlib for people who want the
familiar look. PNG output only; determinism is not promised here.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import (
    CategoryScatterData,
    ParetoPlotData,
    RadarData,
    RankTable,
    ScatterData,
    rank_color,
)
from .svgplot import radar_segments

_CYCLE = ("tab:blue", "tab:red", "tab:green", "tab:purple", "tab:orange", "tab:brown")
_MARKS = ("o", "s", "D", "^", "v", "P")


def pareto_png(data: ParetoPlotData, path) -> None:
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    xs = [p.objectives[0][1] for p in data.points]
    ys = [p.objectives[1][1] for p in data.points]
    ax.scatter(xs, ys, s=18, color="tab:blue", alpha=0.6, label="swept")
    if data.front:
        fx = [p.objectives[0][1] for p in data.front]
        fy = [p.objectives[1][1] for p in data.front]
        ax.plot(fx, fy, "o-", color="tab:red", markersize=5, label="non-dominated")
        for p in data.front:
            ax.annotate(
                p.label,
                (p.objectives[0][1], p.objectives[1][1]),
                textcoords="offset points",
                xytext=(5, 4),
                fontsize=8,
            )
    ax.set_xlabel(f"{data.x_name} ({data.x_direction})")
    ax.set_ylabel(f"{data.y_name} ({data.y_direction})")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def radar_png(data: RadarData, path, normalized: bool = False) -> None:
    n = len(data.axes)
    if normalized:
        scales = [1.0] * n
    else:
        scales = []
        for i in range(n):
            col = [series[i] for _, series in data.series if series[i] is not None]
            top = max(col) if col else 0.0
            scales.append(top if top > 0 else 1.0)
    angles = [2 * math.pi * i / n for i in range(n)]
    fig = plt.figure(figsize=(5.4, 4.6))
    ax = fig.add_subplot(111, projection="polar")
    ax.set_theta_offset(math.pi / 2)
    ax.set_theta_direction(-1)
    ax.set_xticks(angles)
    ax.set_xticklabels(data.axes, fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_yticks([0.25, 0.5, 0.75, 1.0])
    ax.set_yticklabels([])
    for si, (model, series) in enumerate(data.series):
        color = _CYCLE[si % len(_CYCLE)]
        scaled = [
            None if v is None else min(max(v / scales[i], 0.0), 1.0)
            for i, v in enumerate(series)
        ]
        runs = radar_segments(scaled)
        if not runs:
            ax.plot([], [], color=color, label=model)  # legend entry only
            continue
        closed = len(runs) == 1 and len(runs[0]) == n
        for k, seg in enumerate(runs):
            # wrapped indices run past n-1 so the closing edge takes the
            # short way around instead of sweeping back through the gap
            theta = [2 * math.pi * i / n for i in seg]
            vals = [scaled[i % n] for i in seg]
            if closed:
                theta.append(theta[0] + 2 * math.pi)
                vals.append(vals[0])
            ax.plot(
                theta, vals, color=color, linewidth=1.4, marker="o", markersize=2.5,
                label=model if k == 0 else None,
            )
        filled_theta = [2 * math.pi * i / n for i, v in enumerate(scaled) if v is not None]
        filled_vals = [v for v in scaled if v is not None]
        ax.fill(filled_theta, filled_vals, color=color, alpha=0.08)
    ax.set_title(data.metric, fontsize=11)
    ax.legend(loc="upper right", bbox_to_anchor=(1.35, 1.1), fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def rank_table_png(table: RankTable, path) -> None:
    cols = [(ds, m) for ds in table.datasets for m in table.metrics if (ds, m) in table.cells]
    n = len(table.models)
    fig, ax = plt.subplots(figsize=(1.6 + 1.1 * len(cols), 0.9 + 0.32 * n))
    ax.set_xlim(0, len(cols))
    ax.set_ylim(0, n)
    ax.axis("off")
    for ci, (ds, metric) in enumerate(cols):
        arrow = "↓" if table.directions[metric] == "minimize" else "↑"
        ax.text(ci + 0.5, n + 0.55, ds, ha="center", fontsize=8)
        ax.text(ci + 0.5, n + 0.12, f"{metric} {arrow}", ha="center", fontsize=8)
    for ri, model in enumerate(table.models):
        y = n - 1 - ri
        ax.text(-0.1, y + 0.5, model, ha="right", va="center", fontsize=8)
        for ci, key in enumerate(cols):
            cell = table.cells[key].get(model)
            if cell is None:
                ax.add_patch(plt.Rectangle((ci, y), 1, 1, color="#eeeeee"))
                continue
            value, rank = cell
            ax.add_patch(plt.Rectangle((ci, y), 1, 1, color=rank_color(rank, n)))
            ax.text(
                ci + 0.5,
                y + 0.5,
                f"{value:.4g} ({rank})",
                ha="center",
                va="center",
                color="white",
                fontsize=7,
            )
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def scatter_png(data: ScatterData, path) -> None:
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    models = sorted({m for m, _, _, _ in data.points})
    for i, model in enumerate(models):
        pts = [(x, y) for m, _, x, y in data.points if m == model]
        ax.scatter(
            [x for x, _ in pts],
            [y for _, y in pts],
            s=26,
            color=_CYCLE[i % len(_CYCLE)],
            marker=_MARKS[i % len(_MARKS)],
            label=model,
        )
    for model, dataset, x, y in data.points:
        ax.annotate(dataset, (x, y), textcoords="offset points", xytext=(5, 4), fontsize=7)
    ax.set_xlabel(data.x_metric)
    ax.set_ylabel(data.y_metric)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def category_scatter_png(data: CategoryScatterData, path) -> None:
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    slots = {ds: i for i, ds in enumerate(data.datasets)}
    models = sorted({m for m, _, _ in data.points})
    for i, model in enumerate(models):
        pts = [(slots[ds], v) for m, ds, v in data.points if m == model]
        ax.scatter(
            [x for x, _ in pts],
            [y for _, y in pts],
            s=26,
            color=_CYCLE[i % len(_CYCLE)],
            marker=_MARKS[i % len(_MARKS)],
            label=model,
        )
    ax.set_xticks(range(len(data.datasets)))
    ax.set_xticklabels(data.datasets, fontsize=8)
    ax.set_ylabel(data.metric)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_png(data, path, normalized: bool = False) -> None:
    """Dispatch on the analysis data type."""
    if isinstance(data, ParetoPlotData):
        pareto_png(data, path)
    elif isinstance(data, RadarData):
        radar_png(data, path, normalized=normalized)
    elif isinstance(data, RankTable):
        rank_table_png(data, path)
    elif isinstance(data, ScatterData):
        scatter_png(data, path)
    elif isinstance(data, CategoryScatterData):
        category_scatter_png(data, path)
    else:
        raise TypeError(f"no renderer for {type(data).__name__}")
