"""The four scripted evaluation exercises.

Each exercise reads a TOML config naming precomputed inputs (embedding
files, metadata, score tables), computes a fixed metric set through the
streaming engine, and writes one output bundle: results.csv, figures
(deterministic SVG + plot-data JSONL + a matplotlib PNG of each), and a
manifest recording the config, seed, and input digests. The bundle is
assembled in a temporary sibling directory and promoted only on
success, so a failed run never leaves partial output at the target.

Relative paths in a config resolve against the config file's directory.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import os
import shutil
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import figures, svgplot
from .analysis import (
    ParetoPlotData,
    ParetoPoint,
    DEFAULT_DIRECTIONS,
    category_scatter_data,
    metric_sort_key,
    plot_records,
    radar_data,
    rank_table,
    scatter_data,
)
from .consistency import DEFAULT_CLIP_SCALE, clip_scores, vqa_scores
from .data_model import (
    ALL_GROUP,
    ResultRow,
    load_embeddings,
    load_metadata,
    load_score_csv,
    write_results,
)
from .datasets import balanced_subsample, write_assignment
from .engine import MetricSpec, new_state
from .errors import DataError, SpecError
from .marginal import DEFAULT_K
from .version import __version__

EXERCISE_KINDS = ("tradeoffs", "group_representation", "ranking_robustness", "prompt_types")

# Per-exercise metric sets; a config or flag may override.
FIXED_METRICS = {
    "tradeoffs": ("precision", "coverage", "vqascore"),
    "group_representation": ("precision", "coverage", "clipscore"),
    "ranking_robustness": ("fid", "precision", "coverage", "clipscore", "vqascore"),
    "prompt_types": ("precision", "coverage", "fid", "clipscore"),
}

_ENGINE_KIND = {
    "fid": "fid",
    "precision": "prdc",
    "recall": "prdc",
    "density": "prdc",
    "coverage": "prdc",
    "clipscore": "clipscore",
    "vqascore": "vqascore",
    "dsg": "dsg",
}


@dataclass
class ExerciseConfig:
    kind: str
    out: str
    seed: int = 0
    k: int = DEFAULT_K
    scale: float = DEFAULT_CLIP_SCALE
    metrics: tuple = ()
    workers: int = 1
    radar_normalized: bool = False
    base_dir: str = "."
    tables: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EXERCISE_KINDS:
            raise SpecError(f"unknown exercise kind {self.kind!r}; expected one of {EXERCISE_KINDS}")
        if not self.out:
            raise SpecError("exercise config needs an output directory ('out' or --out)")
        if not self.metrics:
            self.metrics = FIXED_METRICS[self.kind]
        self.metrics = tuple(self.metrics)
        for m in self.metrics:
            if m not in _ENGINE_KIND:
                raise SpecError(f"unknown metric {m!r}")
        if self.workers < 1:
            raise SpecError("workers must be >= 1")


def load_config(path, overrides=None) -> ExerciseConfig:
    """Parse a TOML exercise config; entries in `overrides` (CLI flags)
    win over file values."""
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise SpecError(f"{path}: {exc}") from exc
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    scalars = {}
    for name, default in (
        ("kind", None),
        ("out", ""),
        ("seed", 0),
        ("k", DEFAULT_K),
        ("scale", DEFAULT_CLIP_SCALE),
        ("metrics", ()),
        ("workers", 1),
        ("radar_normalized", False),
    ):
        value = overrides.get(name, raw.get(name, default))
        if value is None:
            raise SpecError(f"{path}: missing required key {name!r}")
        scalars[name] = value
    if isinstance(scalars["metrics"], str):
        scalars["metrics"] = tuple(m for m in scalars["metrics"].split(",") if m)
    reserved = {"kind", "out", "seed", "k", "scale", "metrics", "workers", "radar_normalized"}
    tables = {k: v for k, v in raw.items() if k not in reserved}
    return ExerciseConfig(
        kind=str(scalars["kind"]),
        out=str(scalars["out"]),
        seed=int(scalars["seed"]),
        k=int(scalars["k"]),
        scale=float(scalars["scale"]),
        metrics=tuple(scalars["metrics"]),
        workers=int(scalars["workers"]),
        radar_normalized=bool(scalars["radar_normalized"]),
        base_dir=os.path.dirname(os.path.abspath(path)),
        tables=tables,
    )


# ---------------------------------------------------------------------------
# Input loading


class _Loader:
    """Resolves config-relative paths, loads inputs once, and records a
    sha256 digest of every file touched (for the manifest)."""

    def __init__(self, base_dir: str):
        self.base_dir = base_dir
        self.digests: dict = {}
        self._cache: dict = {}

    def _resolve(self, given: str) -> str:
        if os.path.isabs(given):
            return given
        return os.path.normpath(os.path.join(self.base_dir, given))

    def _digest(self, given: str):
        if given in self.digests:
            return
        resolved = self._resolve(given)
        h = hashlib.sha256()
        try:
            with open(resolved, "rb") as fh:
                for chunk in iter(lambda: fh.read(1 << 20), b""):
                    h.update(chunk)
        except FileNotFoundError:
            raise DataError(f"{given}: no such input file") from None
        self.digests[given] = h.hexdigest()

    def _load(self, given: str, tag: str, fn):
        key = (tag, self._resolve(given))
        if key not in self._cache:
            self._digest(given)
            self._cache[key] = fn(key[1])
        return self._cache[key]

    def embeddings(self, given: str) -> np.ndarray:
        return self._load(given, "emb", lambda p: load_embeddings(p).data)

    def metadata(self, given: str):
        return self._load(given, "meta", lambda p: load_metadata(p))

    def scores(self, given: str, kind: str) -> np.ndarray:
        return self._load(given, kind, lambda p: load_score_csv(p, kind).scores)


def _need(table: dict, key: str, where: str) -> object:
    if key not in table:
        raise SpecError(f"{where}: missing required key {key!r}")
    return table[key]


def _check_rows(n: int, label: str, expected: int, where: str):
    if n != expected:
        raise DataError(f"{where}: {label} has {n} rows, expected {expected}")


# ---------------------------------------------------------------------------
# Metric computation shared by all kinds


@dataclass
class _Bundle:
    """Everything needed to score one (model, dataset) pair, already
    loaded and row-aligned."""

    model: str
    dataset: str
    hypers: tuple = ()
    real: np.ndarray = None
    gen: np.ndarray = None
    records: tuple = None
    image_emb: np.ndarray = None
    text_emb: np.ndarray = None
    vqa: np.ndarray = None


def _load_consistency_inputs(bundle: _Bundle, table: dict, loader: _Loader, metrics, where: str):
    if "clipscore" in metrics:
        bundle.image_emb = loader.embeddings(str(_need(table, "image_embeddings", where)))
        bundle.text_emb = loader.embeddings(str(_need(table, "text_embeddings", where)))
    if "vqascore" in metrics:
        raw = loader.scores(str(_need(table, "vqa_scores", where)), "vqa")
        bundle.vqa = np.asarray(vqa_scores(raw), dtype=np.float64)


def _check_bundle_rows(bundle: _Bundle, where: str, expected: int):
    if bundle.gen is not None:
        _check_rows(bundle.gen.shape[0], "gen_embeddings", expected, where)
    if bundle.image_emb is not None:
        _check_rows(bundle.image_emb.shape[0], "image_embeddings", expected, where)
    if bundle.text_emb is not None:
        _check_rows(bundle.text_emb.shape[0], "text_embeddings", expected, where)
    if bundle.vqa is not None:
        _check_rows(len(bundle.vqa), "vqa_scores", expected, where)
    if bundle.records is not None:
        _check_rows(len(bundle.records), "metadata", expected, where)


def _bundle_rows(bundle: _Bundle, metrics, seed: int, k: int, scale: float, grouped: bool) -> list:
    """Score one bundle, returning sorted ResultRows for the requested
    metric names."""
    values: dict = {}
    for engine_kind in dict.fromkeys(_ENGINE_KIND[m] for m in metrics):
        spec = MetricSpec(
            kind=engine_kind,
            k=k if engine_kind == "prdc" else None,
            scale=scale if engine_kind == "clipscore" else None,
            grouped=grouped,
        )
        state = new_state(spec)
        recs = bundle.records if grouped else None
        if engine_kind in ("fid", "prdc"):
            state.update_real(bundle.real, recs)
            state.update_generated(bundle.gen, recs)
        elif engine_kind == "clipscore":
            state.update_generated(clip_scores(bundle.image_emb, bundle.text_emb, scale), recs)
        else:
            state.update_generated(bundle.vqa, recs)
        values.update(state.compute())
    rows = []
    for metric in metrics:
        for group in sorted(values[metric]):
            rows.append(
                ResultRow(
                    model=bundle.model,
                    dataset=bundle.dataset,
                    group=group,
                    hyperparameters=bundle.hypers,
                    metric=metric,
                    value=values[metric][group],
                    seed=seed,
                )
            )
    return rows


def _map_jobs(jobs, workers: int) -> list:
    """Run independent zero-arg jobs, preserving list order in the
    results regardless of worker count."""
    if workers <= 1 or len(jobs) <= 1:
        return [job() for job in jobs]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [f.result() for f in futures]


def _all_values(rows) -> dict:
    """(model, dataset, hypers, metric) -> aggregate value."""
    return {
        (r.model, r.dataset, r.hyperparameters, r.metric): r.value
        for r in rows
        if r.group == ALL_GROUP
    }


# ---------------------------------------------------------------------------
# The four kinds. Each returns (rows, plots, manifest_extra, extra_writer)
# where plots is a list of (name, data) pairs.


def _scalar(cfg: ExerciseConfig, key: str) -> str:
    table = cfg.tables
    if key not in table:
        raise SpecError(f"{cfg.kind} config: missing required key {key!r}")
    value = table[key]
    if isinstance(value, (dict, list)):
        raise SpecError(f"{cfg.kind} config: {key!r} must be a scalar")
    return str(value)


def _expected_rows(bundle: _Bundle, where: str) -> int:
    for arr in (bundle.gen, bundle.image_emb, bundle.vqa):
        if arr is not None:
            return len(arr)
    raise SpecError(f"{where}: no row-aligned inputs for the requested metrics")


def _run_tradeoffs(cfg: ExerciseConfig, loader: _Loader):
    model = _scalar(cfg, "model")
    dataset = _scalar(cfg, "dataset")
    axis = _scalar(cfg, "axis")
    real = loader.embeddings(_scalar(cfg, "real_embeddings"))
    points = cfg.tables.get("points")
    if not isinstance(points, list) or not points:
        raise SpecError("tradeoffs config: needs a non-empty [[points]] list")
    bundles = []
    seen = set()
    for i, point in enumerate(points):
        where = f"points[{i}]"
        value = _need(point, "value", where)
        label = repr(float(value)) if isinstance(value, (int, float)) and not isinstance(value, bool) else str(value)
        if label in seen:
            raise SpecError(f"{where}: duplicate sweep value {label!r}")
        seen.add(label)
        bundle = _Bundle(model=model, dataset=dataset, hypers=((axis, label),), real=real)
        if any(_ENGINE_KIND[m] in ("fid", "prdc") for m in cfg.metrics):
            bundle.gen = loader.embeddings(str(_need(point, "gen_embeddings", where)))
        _load_consistency_inputs(bundle, point, loader, cfg.metrics, where)
        _check_bundle_rows(bundle, where, _expected_rows(bundle, where))
        bundles.append((label, bundle))

    jobs = [
        (lambda b=b: _bundle_rows(b, cfg.metrics, cfg.seed, cfg.k, cfg.scale, grouped=False))
        for _, b in bundles
    ]
    rows = [row for chunk in _map_jobs(jobs, cfg.workers) for row in chunk]

    values = _all_values(rows)
    plots = []
    ordered = sorted(cfg.metrics, key=metric_sort_key)
    for a, b in combinations(ordered, 2):
        pts = [
            ParetoPoint(
                objectives=(
                    (a, values[(model, dataset, ((axis, label),), a)], DEFAULT_DIRECTIONS[a]),
                    (b, values[(model, dataset, ((axis, label),), b)], DEFAULT_DIRECTIONS[b]),
                ),
                label=label,
            )
            for label, _ in bundles
        ]
        plots.append((f"pareto_{a}_{b}", ParetoPlotData.from_points(pts)))
    return rows, plots, {}, None


def _run_group_representation(cfg: ExerciseConfig, loader: _Loader):
    dataset = _scalar(cfg, "dataset")
    real = loader.embeddings(_scalar(cfg, "real_embeddings"))
    records = loader.metadata(_scalar(cfg, "metadata"))
    if not any(r.groups for r in records):
        raise SpecError("group_representation config: metadata carries no group tags")
    models_table = cfg.tables.get("models")
    if not isinstance(models_table, dict) or not models_table:
        raise SpecError("group_representation config: needs a non-empty [models.<name>] table")
    _check_rows(real.shape[0], "real_embeddings", len(records), "group_representation config")

    bundles = []
    for model in sorted(models_table):
        table = models_table[model]
        where = f"models.{model}"
        bundle = _Bundle(model=model, dataset=dataset, real=real, records=records)
        if any(_ENGINE_KIND[m] in ("fid", "prdc") for m in cfg.metrics):
            bundle.gen = loader.embeddings(str(_need(table, "gen_embeddings", where)))
        _load_consistency_inputs(bundle, table, loader, cfg.metrics, where)
        _check_bundle_rows(bundle, where, len(records))
        bundles.append(bundle)

    jobs = [
        (lambda b=b: _bundle_rows(b, cfg.metrics, cfg.seed, cfg.k, cfg.scale, grouped=True))
        for b in bundles
    ]
    rows = [row for chunk in _map_jobs(jobs, cfg.workers) for row in chunk]

    model_names = sorted(models_table)
    plots = [
        (f"radar_{metric}", radar_data(rows, metric, model_names))
        for metric in sorted(cfg.metrics, key=metric_sort_key)
    ]
    return rows, plots, {}, None


def _runs_by_pair(cfg: ExerciseConfig) -> tuple:
    """Common [datasets.<name>] + [runs.<model>.<dataset>] layout; every
    model must cover every dataset."""
    datasets_table = cfg.tables.get("datasets")
    if not isinstance(datasets_table, dict) or not datasets_table:
        raise SpecError(f"{cfg.kind} config: needs a non-empty [datasets.<name>] table")
    runs_table = cfg.tables.get("runs")
    if not isinstance(runs_table, dict) or not runs_table:
        raise SpecError(f"{cfg.kind} config: needs a non-empty [runs.<model>.<dataset>] table")
    for model in sorted(runs_table):
        for ds in sorted(runs_table[model]):
            if ds not in datasets_table:
                raise SpecError(f"runs.{model}.{ds}: dataset {ds!r} is not declared under [datasets]")
        for ds in sorted(datasets_table):
            if ds not in runs_table[model]:
                raise SpecError(f"runs.{model}: missing dataset {ds!r}")
    return datasets_table, runs_table


def _run_ranking_robustness(cfg: ExerciseConfig, loader: _Loader):
    datasets_table, runs_table = _runs_by_pair(cfg)
    reals = {
        ds: loader.embeddings(str(_need(datasets_table[ds], "real_embeddings", f"datasets.{ds}")))
        for ds in sorted(datasets_table)
    }
    bundles = []
    for model in sorted(runs_table):
        for ds in sorted(datasets_table):
            table = runs_table[model][ds]
            where = f"runs.{model}.{ds}"
            bundle = _Bundle(model=model, dataset=ds, real=reals[ds])
            if any(_ENGINE_KIND[m] in ("fid", "prdc") for m in cfg.metrics):
                bundle.gen = loader.embeddings(str(_need(table, "gen_embeddings", where)))
            _load_consistency_inputs(bundle, table, loader, cfg.metrics, where)
            _check_bundle_rows(bundle, where, _expected_rows(bundle, where))
            bundles.append(bundle)

    jobs = [
        (lambda b=b: _bundle_rows(b, cfg.metrics, cfg.seed, cfg.k, cfg.scale, grouped=False))
        for b in bundles
    ]
    rows = [row for chunk in _map_jobs(jobs, cfg.workers) for row in chunk]
    plots = [("rank_table", rank_table(rows))]
    return rows, plots, {}, None


def _run_prompt_types(cfg: ExerciseConfig, loader: _Loader):
    datasets_table, runs_table = _runs_by_pair(cfg)
    reals = {}
    sizes = {}
    for ds in sorted(datasets_table):
        reals[ds] = loader.embeddings(str(_need(datasets_table[ds], "real_embeddings", f"datasets.{ds}")))
        sizes[ds] = reals[ds].shape[0]
    assignment = balanced_subsample(sorted(sizes.items()), cfg.seed)
    picks = {ds: np.asarray(assignment.indices[ds], dtype=np.int64) for ds in sizes}

    bundles = []
    for model in sorted(runs_table):
        for ds in sorted(datasets_table):
            table = runs_table[model][ds]
            where = f"runs.{model}.{ds}"
            bundle = _Bundle(model=model, dataset=ds, real=reals[ds])
            if any(_ENGINE_KIND[m] in ("fid", "prdc") for m in cfg.metrics):
                bundle.gen = loader.embeddings(str(_need(table, "gen_embeddings", where)))
            _load_consistency_inputs(bundle, table, loader, cfg.metrics, where)
            _check_bundle_rows(bundle, where, sizes[ds])
            # subsample every row-aligned input with the dataset's picks
            idx = picks[ds]
            bundle.real = bundle.real[idx]
            if bundle.gen is not None:
                bundle.gen = bundle.gen[idx]
            if bundle.image_emb is not None:
                bundle.image_emb = bundle.image_emb[idx]
            if bundle.text_emb is not None:
                bundle.text_emb = bundle.text_emb[idx]
            if bundle.vqa is not None:
                bundle.vqa = bundle.vqa[idx]
            bundles.append(bundle)

    jobs = [
        (lambda b=b: _bundle_rows(b, cfg.metrics, cfg.seed, cfg.k, cfg.scale, grouped=False))
        for b in bundles
    ]
    rows = [row for chunk in _map_jobs(jobs, cfg.workers) for row in chunk]

    plots = []
    if "precision" in cfg.metrics and "coverage" in cfg.metrics:
        plots.append(("scatter_precision_coverage", scatter_data(rows, "precision", "coverage")))
    for metric in sorted(cfg.metrics, key=metric_sort_key):
        if metric in ("precision", "coverage"):
            continue
        plots.append((f"datasets_{metric}", category_scatter_data(rows, metric)))

    extra = {
        "subsample": {
            "target_size": assignment.target_size,
            "dataset_sizes": {ds: sizes[ds] for ds in sorted(sizes)},
        }
    }

    def write_extra(out_dir: str):
        write_assignment(assignment, os.path.join(out_dir, "subsample.csv"))

    return rows, plots, extra, write_extra


_KIND_RUNNERS = {
    "tradeoffs": _run_tradeoffs,
    "group_representation": _run_group_representation,
    "ranking_robustness": _run_ranking_robustness,
    "prompt_types": _run_prompt_types,
}


# ---------------------------------------------------------------------------
# Bundle assembly


def _manifest(cfg: ExerciseConfig, loader: _Loader, extra: dict) -> dict:
    doc = {
        "kind": cfg.kind,
        "seed": cfg.seed,
        "version": __version__,
        "config": {
            "kind": cfg.kind,
            "seed": cfg.seed,
            "k": cfg.k,
            "scale": cfg.scale,
            "metrics": list(cfg.metrics),
            "radar_normalized": cfg.radar_normalized,
            "tables": cfg.tables,
        },
        "inputs": {given: f"sha256:{digest}" for given, digest in sorted(loader.digests.items())},
    }
    doc.update(extra)
    return doc


def run_exercise(cfg: ExerciseConfig) -> str:
    """Run one exercise end to end; returns the promoted output
    directory."""
    loader = _Loader(cfg.base_dir)
    rows, plots, extra, write_extra = _KIND_RUNNERS[cfg.kind](cfg, loader)

    out_dir = os.path.abspath(cfg.out)
    parent = os.path.dirname(out_dir) or "."
    os.makedirs(parent, exist_ok=True)
    tmp_dir = os.path.join(parent, f".{os.path.basename(out_dir)}.partial-{os.getpid()}")
    if os.path.exists(tmp_dir):
        shutil.rmtree(tmp_dir)
    os.makedirs(tmp_dir)
    try:
        write_results(rows, os.path.join(tmp_dir, "results.csv"))
        fig_dir = os.path.join(tmp_dir, "figures")
        os.makedirs(fig_dir)
        for name, data in plots:
            _emit_plot(fig_dir, name, data, cfg.radar_normalized)
        if write_extra is not None:
            write_extra(tmp_dir)
        manifest = _manifest(cfg, loader, extra)
        with open(os.path.join(tmp_dir, "manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except BaseException:
        shutil.rmtree(tmp_dir, ignore_errors=True)
        raise
    if os.path.isdir(out_dir):
        shutil.rmtree(out_dir)
    os.replace(tmp_dir, out_dir)
    return out_dir


def _emit_plot(fig_dir: str, name: str, data, radar_normalized: bool = False) -> None:
    svgplot.write_svg(
        svgplot.render_svg(data, normalized=radar_normalized),
        os.path.join(fig_dir, f"{name}.svg"),
    )
    with open(os.path.join(fig_dir, f"{name}.jsonl"), "w", encoding="utf-8") as fh:
        for record in plot_records(data):
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    figures.render_png(data, os.path.join(fig_dir, f"{name}.png"), normalized=radar_normalized)
