"""Turns results rows into plot-ready data: Pareto fronts, ranking
tables, radar series, and scatter point sets.

Every function here is a pure function of the rows it is given;
rendering lives in svgplot (deterministic SVG) and figures (matplotlib).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .data_model import ALL_GROUP, ResultRow, format_hyperparameters
from .errors import DataError, SpecError

MAXIMIZE = "maximize"
MINIMIZE = "minimize"

# Lower Fréchet distance is better; everything else in the built-in set
# is a proportion or similarity where higher is better.
DEFAULT_DIRECTIONS = {
    "fid": MINIMIZE,
    "precision": MAXIMIZE,
    "recall": MAXIMIZE,
    "density": MAXIMIZE,
    "coverage": MAXIMIZE,
    "clipscore": MAXIMIZE,
    "vqascore": MAXIMIZE,
    "dsg": MAXIMIZE,
}

_METRIC_ORDER = ["fid", "precision", "recall", "density", "coverage", "clipscore", "vqascore", "dsg"]


def metric_sort_key(metric: str) -> tuple:
    try:
        return (0, _METRIC_ORDER.index(metric))
    except ValueError:
        return (1, metric)


# ---------------------------------------------------------------------------
# Pareto fronts


@dataclass(frozen=True)
class ParetoPoint:
    """A candidate with 2-3 named objectives and a label (e.g. the sweep
    value that produced it)."""

    objectives: tuple  # ((name, value, direction), ...)
    label: str

    def __post_init__(self):
        objs = tuple((str(n), float(v), str(d)) for n, v, d in self.objectives)
        if not 2 <= len(objs) <= 3:
            raise SpecError(f"need 2 or 3 objectives, got {len(objs)}")
        for n, v, d in objs:
            if d not in (MAXIMIZE, MINIMIZE):
                raise SpecError(f"bad direction {d!r} for objective {n!r}")
            if v != v or v in (float("inf"), float("-inf")):
                raise DataError(f"non-finite objective {n!r} = {v}")
        object.__setattr__(self, "objectives", objs)

    def signature(self) -> tuple:
        return tuple((n, d) for n, v, d in self.objectives)

    def normalized(self) -> tuple:
        """Objective values with minimized ones negated, so bigger is
        always better."""
        return tuple(v if d == MAXIMIZE else -v for _, v, d in self.objectives)


def _dominates(a: tuple, b: tuple) -> bool:
    return all(x >= y for x, y in zip(a, b)) and any(x > y for x, y in zip(a, b))


def pareto_front(points) -> list:
    """Non-dominated subset, sorted by first objective descending.

    Ties sort by the remaining objectives descending then label, so the
    output does not depend on input order. Duplicated points are all
    kept: neither copy strictly beats the other.
    """
    points = list(points)
    if not points:
        return []
    sig = points[0].signature()
    for p in points[1:]:
        if p.signature() != sig:
            raise SpecError(f"heterogeneous objectives: {p.signature()} vs {sig}")
    norm = [p.normalized() for p in points]
    front = [
        p
        for i, p in enumerate(points)
        if not any(_dominates(norm[j], norm[i]) for j in range(len(points)) if j != i)
    ]

    def order(p: ParetoPoint) -> tuple:
        vals = tuple(v for _, v, _ in p.objectives)
        return tuple(-v for v in vals) + (p.label,)

    return sorted(front, key=order)


# ---------------------------------------------------------------------------
# Ranking tables


@dataclass(frozen=True)
class RankTable:
    models: tuple  # sorted model names
    datasets: tuple  # sorted dataset names
    metrics: tuple  # canonical metric order
    directions: dict  # metric -> direction
    cells: dict  # (dataset, metric) -> {model: (value, rank)}


def competition_ranks(values, direction: str) -> list:
    """1 + the number of strictly better entries; ties share the minimum
    rank and the next rank skips."""
    better = (lambda a, b: a < b) if direction == MINIMIZE else (lambda a, b: a > b)
    return [1 + sum(1 for w in values if better(w, v)) for v in values]


def rank_table(rows, directions: Optional[dict] = None) -> RankTable:
    """Per-(dataset, metric) model rankings from aggregate result rows.

    Rows for disaggregated groups are ignored; each column must hold one
    value per model appearing in it.
    """
    dirs = dict(DEFAULT_DIRECTIONS)
    if directions:
        for m, d in directions.items():
            if d not in (MAXIMIZE, MINIMIZE):
                raise SpecError(f"bad direction {d!r} for metric {m!r}")
            dirs[m] = d
    columns: dict = {}
    for row in rows:
        if row.group != ALL_GROUP:
            continue
        if row.metric not in dirs:
            raise SpecError(f"no direction declared for metric {row.metric!r}")
        col = columns.setdefault((row.dataset, row.metric), {})
        if row.model in col:
            raise SpecError(
                f"multiple values for model {row.model!r} in column ({row.dataset}, {row.metric})"
            )
        col[row.model] = row.value
    if not columns:
        raise DataError("no aggregate rows to rank")
    models = sorted({m for col in columns.values() for m in col})
    datasets = sorted({ds for ds, _ in columns})
    metrics = sorted({m for _, m in columns}, key=metric_sort_key)
    cells = {}
    for key, col in columns.items():
        names = sorted(col)
        ranks = competition_ranks([col[m] for m in names], dirs[key[1]])
        cells[key] = {m: (col[m], r) for m, r in zip(names, ranks)}
    return RankTable(
        models=tuple(models),
        datasets=tuple(datasets),
        metrics=tuple(metrics),
        directions={m: dirs[m] for m in metrics},
        cells=cells,
    )


def rank_color(rank: int, n_models: int) -> str:
    """Fixed green-to-red ramp position for a rank, as #rrggbb."""
    top = (0x1A, 0x98, 0x50)
    bottom = (0xD7, 0x30, 0x27)
    t = 0.0 if n_models <= 1 else (rank - 1) / (n_models - 1)
    rgb = tuple(round(a + (b - a) * t) for a, b in zip(top, bottom))
    return "#%02x%02x%02x" % rgb


# ---------------------------------------------------------------------------
# Radar / scatter data


@dataclass(frozen=True)
class RadarData:
    metric: str
    axes: tuple  # sorted group names
    series: tuple  # ((model, (value | None, ...)), ...)


def radar_data(rows, metric: str, models) -> RadarData:
    """Per-group values for one metric across models.

    Axes are the lexicographically sorted group names; a missing
    (model, group) value becomes an explicit None gap, never a zero.
    """
    models = list(models)
    if not models:
        raise SpecError("radar needs at least one model")
    per_model: dict = {m: {} for m in models}
    axes = set()
    for row in rows:
        if row.metric != metric or row.group == ALL_GROUP:
            continue
        axes.add(row.group)
        if row.model in per_model:
            if row.group in per_model[row.model]:
                raise DataError(
                    f"multiple {metric} values for ({row.model}, {row.group})"
                )
            per_model[row.model][row.group] = row.value
    if not axes:
        raise DataError(f"no group-disaggregated rows for metric {metric!r}")
    axes = tuple(sorted(axes))
    series = tuple(
        (m, tuple(per_model[m].get(g) for g in axes)) for m in models
    )
    return RadarData(metric=metric, axes=axes, series=series)


@dataclass(frozen=True)
class ScatterData:
    x_metric: str
    y_metric: str
    points: tuple  # ((model, dataset, x, y), ...) sorted by (model, dataset)


def scatter_data(rows, x_metric: str, y_metric: str) -> ScatterData:
    """One (x, y) point per (model, dataset) from aggregate rows."""
    values: dict = {}
    pairs = set()
    for row in rows:
        if row.group != ALL_GROUP or row.metric not in (x_metric, y_metric):
            continue
        pairs.add((row.model, row.dataset))
        key = (row.model, row.dataset, row.metric)
        if key in values:
            raise DataError(f"multiple values for {key}")
        values[key] = row.value
    if not pairs:
        raise DataError(f"no rows for metrics {x_metric!r}/{y_metric!r}")
    points = []
    for model, dataset in sorted(pairs):
        for metric in (x_metric, y_metric):
            if (model, dataset, metric) not in values:
                raise DataError(f"missing {metric} value for ({model}, {dataset})")
        points.append(
            (model, dataset, values[(model, dataset, x_metric)], values[(model, dataset, y_metric)])
        )
    return ScatterData(x_metric=x_metric, y_metric=y_metric, points=tuple(points))


@dataclass(frozen=True)
class CategoryScatterData:
    """One metric per (model, dataset), laid out against the dataset axis."""

    metric: str
    datasets: tuple  # sorted, defines the category order
    points: tuple  # ((model, dataset, value), ...) sorted by (model, dataset)


def category_scatter_data(rows, metric: str) -> CategoryScatterData:
    values: dict = {}
    for row in rows:
        if row.group != ALL_GROUP or row.metric != metric:
            continue
        key = (row.model, row.dataset)
        if key in values:
            raise DataError(f"multiple {metric} values for {key}")
        values[key] = row.value
    if not values:
        raise DataError(f"no rows for metric {metric!r}")
    datasets = tuple(sorted({ds for _, ds in values}))
    points = tuple((m, ds, values[(m, ds)]) for m, ds in sorted(values))
    return CategoryScatterData(metric=metric, datasets=datasets, points=points)


# ---------------------------------------------------------------------------
# Line-delimited plot-data export


def plot_records(data) -> list:
    """Machine-readable records mirroring what the SVG shows."""
    if isinstance(data, ParetoPlotData):
        front_set = set(data.front)
        return [
            {
                "label": p.label,
                data.x_name: p.objectives[0][1],
                data.y_name: p.objectives[1][1],
                "on_front": p in front_set,
            }
            for p in data.points
        ]
    if isinstance(data, RadarData):
        return [
            {"model": m, "axes": list(data.axes), "metric": data.metric, "values": list(vals)}
            for m, vals in data.series
        ]
    if isinstance(data, ScatterData):
        return [
            {"model": m, "dataset": ds, data.x_metric: x, data.y_metric: y}
            for m, ds, x, y in data.points
        ]
    if isinstance(data, CategoryScatterData):
        return [{"model": m, "dataset": ds, data.metric: v} for m, ds, v in data.points]
    if isinstance(data, RankTable):
        out = []
        for ds in data.datasets:
            for metric in data.metrics:
                col = data.cells.get((ds, metric), {})
                for m in data.models:
                    if m in col:
                        value, rank = col[m]
                        out.append(
                            {"model": m, "dataset": ds, "metric": metric, "value": value, "rank": rank}
                        )
        return out
    raise SpecError(f"cannot export plot data for {type(data).__name__}")


@dataclass(frozen=True)
class ParetoPlotData:
    """All swept points plus their non-dominated subset for one pair of
    objectives."""

    x_name: str
    y_name: str
    x_direction: str
    y_direction: str
    points: tuple  # ParetoPoint, input order
    front: tuple

    @classmethod
    def from_points(cls, points) -> "ParetoPlotData":
        points = tuple(points)
        if not points:
            raise SpecError("no points to plot")
        front = tuple(pareto_front(points))
        (xn, _, xd), (yn, _, yd) = points[0].objectives[:2]
        return cls(
            x_name=xn, y_name=yn, x_direction=xd, y_direction=yd, points=points, front=front
        )
