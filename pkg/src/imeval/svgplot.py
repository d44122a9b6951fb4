"""Deterministic SVG rendering for the analysis data types.

The emitter is deliberately hand-rolled: element order is fixed, every
coordinate goes through one '%.6g' formatter, and nothing (timestamps,
ids, library version strings) leaks into the output, so the same data
always produces the same bytes.
"""

from __future__ import annotations

import math

from .analysis import (
    CategoryScatterData,
    ParetoPlotData,
    RadarData,
    RankTable,
    ScatterData,
    rank_color,
)
from .errors import SpecError

# Fixed series palette, assigned to models in sorted order.
PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#e377c2",
    "#17becf",
)

MARKERS = ("circle", "square", "diamond", "triangle")


def fmt(x: float) -> str:
    s = "%.6g" % float(x)
    return "0" if s == "-0" else s


def esc(text: str) -> str:
    return (
        str(text)
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


class _Svg:
    def __init__(self, width: float, height: float):
        self.width = width
        self.height = height
        self.parts = []

    def tag(self, name: str, text=None, **attrs):
        keys = sorted(attrs)
        body = " ".join(f'{k.replace("_", "-")}="{esc(attrs[k])}"' for k in keys)
        if text is None:
            self.parts.append(f"<{name} {body}/>")
        else:
            self.parts.append(f"<{name} {body}>{esc(text)}</{name}>")

    def raw(self, line: str):
        self.parts.append(line)

    def render(self) -> str:
        head = (
            '<svg xmlns="http://www.w3.org/2000/svg" '
            f'width="{fmt(self.width)}" height="{fmt(self.height)}" '
            f'viewBox="0 0 {fmt(self.width)} {fmt(self.height)}" '
            'font-family="sans-serif" font-size="11">'
        )
        return "\n".join([head] + self.parts + ["</svg>"]) + "\n"


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        step = mult * mag
        if raw <= step:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + step * 1e-9:
        ticks.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return ticks


class _Axis:
    """Linear map from data range to pixel range, padded 5% each side."""

    def __init__(self, values, px_lo: float, px_hi: float):
        values = [float(v) for v in values]
        lo, hi = min(values), max(values)
        if hi == lo:
            pad = abs(lo) * 0.1 or 1.0
        else:
            pad = (hi - lo) * 0.05
        self.lo = lo - pad
        self.hi = hi + pad
        self.px_lo = px_lo
        self.px_hi = px_hi

    def __call__(self, v: float) -> float:
        t = (float(v) - self.lo) / (self.hi - self.lo)
        return self.px_lo + t * (self.px_hi - self.px_lo)

    def ticks(self) -> list:
        return _nice_ticks(self.lo, self.hi)


def _marker(svg: _Svg, kind: str, x: float, y: float, r: float, color: str):
    if kind == "circle":
        svg.tag("circle", cx=fmt(x), cy=fmt(y), r=fmt(r), fill=color)
    elif kind == "square":
        svg.tag(
            "rect",
            x=fmt(x - r),
            y=fmt(y - r),
            width=fmt(2 * r),
            height=fmt(2 * r),
            fill=color,
        )
    elif kind == "diamond":
        pts = f"{fmt(x)},{fmt(y - r)} {fmt(x + r)},{fmt(y)} {fmt(x)},{fmt(y + r)} {fmt(x - r)},{fmt(y)}"
        svg.tag("polygon", points=pts, fill=color)
    else:
        pts = f"{fmt(x)},{fmt(y - r)} {fmt(x + r)},{fmt(y + r)} {fmt(x - r)},{fmt(y + r)}"
        svg.tag("polygon", points=pts, fill=color)


def _frame(svg: _Svg, x_axis: _Axis, y_axis: _Axis, x_label: str, y_label: str):
    left, right = x_axis.px_lo, x_axis.px_hi
    top, bottom = y_axis.px_hi, y_axis.px_lo
    svg.tag(
        "rect",
        x=fmt(left),
        y=fmt(top),
        width=fmt(right - left),
        height=fmt(bottom - top),
        fill="none",
        stroke="#333333",
    )
    for t in x_axis.ticks():
        px = x_axis(t)
        svg.tag("line", x1=fmt(px), y1=fmt(bottom), x2=fmt(px), y2=fmt(bottom + 4), stroke="#333333")
        svg.tag("text", fmt(t), x=fmt(px), y=fmt(bottom + 16), text_anchor="middle")
    for t in y_axis.ticks():
        py = y_axis(t)
        svg.tag("line", x1=fmt(left - 4), y1=fmt(py), x2=fmt(left), y2=fmt(py), stroke="#333333")
        svg.tag("text", fmt(t), x=fmt(left - 8), y=fmt(py + 4), text_anchor="end")
    svg.tag(
        "text",
        x_label,
        x=fmt((left + right) / 2),
        y=fmt(bottom + 32),
        text_anchor="middle",
        font_weight="bold",
    )
    svg.tag(
        "text",
        y_label,
        x=fmt(14),
        y=fmt((top + bottom) / 2),
        text_anchor="middle",
        font_weight="bold",
        transform=f"rotate(-90 14 {fmt((top + bottom) / 2)})",
    )


def _legend(svg: _Svg, names, x: float, y: float):
    for i, name in enumerate(names):
        color = PALETTE[i % len(PALETTE)]
        row = y + i * 16
        _marker(svg, MARKERS[i % len(MARKERS)], x, row - 4, 4, color)
        svg.tag("text", name, x=fmt(x + 10), y=fmt(row))


# ---------------------------------------------------------------------------
# Plot kinds


def pareto_svg(data: ParetoPlotData) -> str:
    """Objective-vs-objective scatter with the non-dominated subset
    joined by a line."""
    svg = _Svg(460, 360)
    xs = [p.objectives[0][1] for p in data.points]
    ys = [p.objectives[1][1] for p in data.points]
    x_axis = _Axis(xs, 56, 440)
    y_axis = _Axis(ys, 320, 20)
    _frame(
        svg,
        x_axis,
        y_axis,
        f"{data.x_name} ({data.x_direction})",
        f"{data.y_name} ({data.y_direction})",
    )
    front = set(data.front)
    if len(data.front) > 1:
        pts = " ".join(
            f"{fmt(x_axis(p.objectives[0][1]))},{fmt(y_axis(p.objectives[1][1]))}"
            for p in data.front
        )
        svg.tag("polyline", points=pts, fill="none", stroke="#d62728", stroke_width="1.5")
    for p in data.points:
        px, py = x_axis(p.objectives[0][1]), y_axis(p.objectives[1][1])
        if p in front:
            svg.tag("circle", cx=fmt(px), cy=fmt(py), r="4", fill="#d62728")
        else:
            svg.tag("circle", cx=fmt(px), cy=fmt(py), r="3", fill="#1f77b4", fill_opacity="0.6")
    for p in data.front:
        px, py = x_axis(p.objectives[0][1]), y_axis(p.objectives[1][1])
        svg.tag("text", p.label, x=fmt(px + 6), y=fmt(py - 4))
    return svg.render()


def radar_segments(series) -> list:
    """Runs of consecutive valued axes, treated circularly: when both ends
    of the series hold values, the trailing run wraps around to join the
    leading one. Indices in a wrapped run keep counting past n-1 so the
    caller can place the joined vertices on the correct side of the rim."""
    n = len(series)
    runs, current = [], []
    for i, v in enumerate(series):
        if v is None:
            if current:
                runs.append(current)
            current = []
        else:
            current.append(i)
    if current:
        runs.append(current)
    if len(runs) > 1 and series[0] is not None and series[-1] is not None:
        first = runs.pop(0)
        runs[-1] = runs[-1] + [i + n for i in first]
    return runs


def radar_svg(data: RadarData, normalized: bool = False) -> str:
    """One spoke per group; series segments break at missing values
    instead of collapsing to the centre.

    By default each axis is scaled so the best plotted model touches the
    rim; normalized=True maps raw values onto a shared [0, 1] rim for
    metrics that are already proportions.
    """
    svg = _Svg(520, 420)
    cx, cy, radius = 210.0, 215.0, 150.0
    n = len(data.axes)
    vals = [v for _, series in data.series for v in series if v is not None]
    if not vals:
        raise SpecError("radar has no values to draw")
    if normalized:
        scales = [1.0] * n
    else:
        scales = []
        for i in range(n):
            col = [series[i] for _, series in data.series if series[i] is not None]
            top = max(col) if col else 0.0
            scales.append(top if top > 0 else 1.0)

    def point(axis_i: int, value: float):
        # axis_i may run past n-1 for a wrapped segment
        angle = -math.pi / 2 + 2 * math.pi * axis_i / n
        r = radius * min(max(value / scales[axis_i % n], 0.0), 1.0)
        return cx + r * math.cos(angle), cy + r * math.sin(angle)

    for frac in (0.25, 0.5, 0.75, 1.0):
        ring = " ".join(
            f"{fmt(cx + radius * frac * math.cos(-math.pi / 2 + 2 * math.pi * i / n))},"
            f"{fmt(cy + radius * frac * math.sin(-math.pi / 2 + 2 * math.pi * i / n))}"
            for i in range(n)
        )
        svg.tag("polygon", points=ring, fill="none", stroke="#cccccc")
    for i, axis in enumerate(data.axes):
        angle = -math.pi / 2 + 2 * math.pi * i / n
        ex, ey = cx + radius * math.cos(angle), cy + radius * math.sin(angle)
        svg.tag("line", x1=fmt(cx), y1=fmt(cy), x2=fmt(ex), y2=fmt(ey), stroke="#cccccc")
        lx = cx + (radius + 14) * math.cos(angle)
        ly = cy + (radius + 14) * math.sin(angle)
        svg.tag("text", axis, x=fmt(lx), y=fmt(ly + 4), text_anchor="middle")
        rim = 1.0 if normalized else scales[i]
        svg.tag("text", fmt(rim), x=fmt(ex + 2), y=fmt(ey - 2), font_size="8", fill="#888888")
    for si, (model, series) in enumerate(data.series):
        color = PALETTE[si % len(PALETTE)]
        runs = radar_segments(series)
        if len(runs) == 1 and len(runs[0]) == n:
            # closed only when every axis has a value
            pts = " ".join(
                f"{fmt(x)},{fmt(y)}" for x, y in (point(i, series[i]) for i in runs[0])
            )
            svg.tag(
                "polygon",
                points=pts,
                fill=color,
                fill_opacity="0.15",
                stroke=color,
                stroke_width="1.5",
            )
        else:
            for seg in runs:
                if len(seg) > 1:
                    pts = " ".join(
                        f"{fmt(x)},{fmt(y)}" for x, y in (point(i, series[i % n]) for i in seg)
                    )
                    svg.tag("polyline", points=pts, fill="none", stroke=color, stroke_width="1.5")
        for i, v in enumerate(series):
            if v is not None:
                px, py = point(i, v)
                svg.tag("circle", cx=fmt(px), cy=fmt(py), r="2.5", fill=color)
    svg.tag("text", data.metric, x=fmt(cx), y=fmt(18), text_anchor="middle", font_weight="bold")
    _legend(svg, [m for m, _ in data.series], 400, 40)
    return svg.render()


def rank_table_svg(table: RankTable) -> str:
    """Grid of metric values colored by rank on a fixed green-to-red
    ramp. Cell fills are written by rank_color, so a reader can recover
    the rank from the fill."""
    col_w, row_h = 86.0, 22.0
    label_w, head_h = 150.0, 46.0
    cols = [(ds, m) for ds in table.datasets for m in table.metrics if (ds, m) in table.cells]
    if not cols:
        raise SpecError("rank table has no columns")
    width = label_w + col_w * len(cols) + 10
    height = head_h + row_h * len(table.models) + 10
    svg = _Svg(width, height)
    n = len(table.models)
    for ci, (ds, metric) in enumerate(cols):
        x = label_w + col_w * ci + col_w / 2
        svg.tag("text", ds, x=fmt(x), y=fmt(16), text_anchor="middle")
        arrow = "↓" if table.directions[metric] == "minimize" else "↑"
        svg.tag("text", f"{metric} {arrow}", x=fmt(x), y=fmt(32), text_anchor="middle")
    for ri, model in enumerate(table.models):
        y = head_h + row_h * ri
        svg.tag("text", model, x=fmt(label_w - 8), y=fmt(y + row_h - 7), text_anchor="end")
        for ci, key in enumerate(cols):
            cell = table.cells[key].get(model)
            x = label_w + col_w * ci
            if cell is None:
                svg.tag(
                    "rect",
                    x=fmt(x),
                    y=fmt(y),
                    width=fmt(col_w),
                    height=fmt(row_h),
                    fill="#eeeeee",
                    stroke="#ffffff",
                )
                continue
            value, rank = cell
            svg.tag(
                "rect",
                x=fmt(x),
                y=fmt(y),
                width=fmt(col_w),
                height=fmt(row_h),
                fill=rank_color(rank, n),
                stroke="#ffffff",
            )
            svg.tag(
                "text",
                f"{fmt(value)} ({rank})",
                x=fmt(x + col_w / 2),
                y=fmt(y + row_h - 7),
                text_anchor="middle",
                fill="#ffffff",
            )
    return svg.render()


def _xy_scatter(svg, points, x_axis, y_axis, models):
    index = {m: i for i, m in enumerate(models)}
    for model, _, x, y in points:
        i = index[model]
        _marker(
            svg, MARKERS[i % len(MARKERS)], x_axis(x), y_axis(y), 4, PALETTE[i % len(PALETTE)]
        )


def scatter_svg(data: ScatterData) -> str:
    """Metric-vs-metric scatter, one marker per (model, dataset)."""
    svg = _Svg(560, 360)
    xs = [x for _, _, x, _ in data.points]
    ys = [y for _, _, _, y in data.points]
    x_axis = _Axis(xs, 56, 430)
    y_axis = _Axis(ys, 320, 20)
    _frame(svg, x_axis, y_axis, data.x_metric, data.y_metric)
    models = sorted({m for m, _, _, _ in data.points})
    _xy_scatter(svg, data.points, x_axis, y_axis, models)
    for model, dataset, x, y in data.points:
        svg.tag("text", dataset, x=fmt(x_axis(x) + 6), y=fmt(y_axis(y) - 5), font_size="9")
    _legend(svg, models, 444, 40)
    return svg.render()


def category_scatter_svg(data: CategoryScatterData) -> str:
    """One metric against a categorical dataset axis."""
    svg = _Svg(560, 360)
    slots = {ds: i for i, ds in enumerate(data.datasets)}
    ys = [v for _, _, v in data.points]
    x_axis = _Axis([-0.5, len(data.datasets) - 0.5], 56, 430)
    y_axis = _Axis(ys, 320, 20)
    left, right, bottom, top = 56, 430, 320, 20
    svg.tag(
        "rect",
        x=fmt(left),
        y=fmt(top),
        width=fmt(right - left),
        height=fmt(bottom - top),
        fill="none",
        stroke="#333333",
    )
    for ds, i in sorted(slots.items()):
        px = x_axis(i)
        svg.tag("line", x1=fmt(px), y1=fmt(bottom), x2=fmt(px), y2=fmt(bottom + 4), stroke="#333333")
        svg.tag("text", ds, x=fmt(px), y=fmt(bottom + 16), text_anchor="middle")
    for t in y_axis.ticks():
        py = y_axis(t)
        svg.tag("line", x1=fmt(left - 4), y1=fmt(py), x2=fmt(left), y2=fmt(py), stroke="#333333")
        svg.tag("text", fmt(t), x=fmt(left - 8), y=fmt(py + 4), text_anchor="end")
    svg.tag(
        "text",
        data.metric,
        x=fmt(14),
        y=fmt((top + bottom) / 2),
        text_anchor="middle",
        font_weight="bold",
        transform=f"rotate(-90 14 {fmt((top + bottom) / 2)})",
    )
    models = sorted({m for m, _, _ in data.points})
    index = {m: i for i, m in enumerate(models)}
    for model, ds, v in data.points:
        i = index[model]
        _marker(
            svg,
            MARKERS[i % len(MARKERS)],
            x_axis(slots[ds]),
            y_axis(v),
            4,
            PALETTE[i % len(PALETTE)],
        )
    _legend(svg, models, 444, 40)
    return svg.render()


def render_svg(data, normalized: bool = False) -> str:
    """Dispatch on the analysis data type."""
    if isinstance(data, ParetoPlotData):
        return pareto_svg(data)
    if isinstance(data, RadarData):
        return radar_svg(data, normalized=normalized)
    if isinstance(data, RankTable):
        return rank_table_svg(data)
    if isinstance(data, ScatterData):
        return scatter_svg(data)
    if isinstance(data, CategoryScatterData):
        return category_scatter_svg(data)
    raise TypeError(f"no renderer for {type(data).__name__}")


def write_svg(text: str, path) -> None:
    with open(path, "wb") as fh:
        fh.write(text.encode("utf-8"))
