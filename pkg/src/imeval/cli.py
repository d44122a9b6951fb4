"""Command-line surface.

Subcommands: compute (one metric over input files, streamed in
batches), exercise (the four scripted evaluations), sweep-collect
(merge per-point result files along a hyperparameter axis), subsample
(balanced cross-dataset index assignment), validate-balance (group x
class count check), and render (figures from a results CSV).

Every failure exits nonzero with a one-line diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import figures, svgplot
from .analysis import (
    DEFAULT_DIRECTIONS,
    ParetoPlotData,
    ParetoPoint,
    category_scatter_data,
    plot_records,
    radar_data,
    rank_table,
    scatter_data,
)
from .consistency import DEFAULT_CLIP_SCALE, DsgAnswers, clip_scores, dsg_score, vqa_scores
from .data_model import (
    ALL_GROUP,
    ResultRow,
    append_results,
    load_dsg_answers,
    load_embeddings,
    load_metadata,
    load_score_csv,
    read_results,
    write_results,
)
from .datasets import balanced_subsample, validate_balance, write_assignment
from .engine import CONSISTENCY_KINDS, MARGINAL_KINDS, MetricSpec, new_state
from .errors import ConflictError, DataError, EvalError, SpecError
from .exercises import EXERCISE_KINDS, load_config, run_exercise
from .marginal import DEFAULT_K
from .version import __version__

DEFAULT_BATCH = 1024


def _common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=None, help="seed recorded with results")
    sub.add_argument("--out", default=None, help="output file or directory")
    sub.add_argument(
        "--workers", type=int, default=None, help="parallel jobs for independent work"
    )
    sub.add_argument(
        "--batch-size",
        type=int,
        default=DEFAULT_BATCH,
        help="rows per engine update; never changes results",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="imeval")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("compute", help="compute one metric from input files")
    _common_flags(p)
    p.add_argument("--metric", required=True, choices=MARGINAL_KINDS + CONSISTENCY_KINDS)
    p.add_argument("--real", help="reference embeddings (.npy)")
    p.add_argument("--gen", help="generated embeddings (.npy)")
    p.add_argument("--image-embeddings", help="generated-image embeddings (.npy)")
    p.add_argument("--text-embeddings", help="prompt embeddings (.npy)")
    p.add_argument("--vqa-scores", help="per-sample probabilities (CSV)")
    p.add_argument("--dsg-answers", help="per-sample question answers (JSONL)")
    p.add_argument("--metadata", help="sample records (JSONL)")
    p.add_argument("--grouped", action="store_true", help="also report per-group values")
    p.add_argument("--k", type=int, default=DEFAULT_K, help="manifold neighbor count")
    p.add_argument("--scale", type=float, default=DEFAULT_CLIP_SCALE)
    p.add_argument("--model", default="model")
    p.add_argument("--dataset", default="dataset")
    p.add_argument(
        "--hyper",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="hyperparameter recorded with each row (repeatable)",
    )
    p.set_defaults(func=cmd_compute)

    p = subs.add_parser("exercise", help="run one scripted evaluation end to end")
    p.add_argument("kind", choices=EXERCISE_KINDS)
    p.add_argument("--config", required=True, help="TOML config file")
    _common_flags(p)
    p.add_argument("--metrics", default=None, help="comma-separated metric override")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--scale", type=float, default=None)
    p.set_defaults(func=cmd_exercise)

    p = subs.add_parser("sweep-collect", help="merge result files along one axis")
    p.add_argument("files", nargs="+", help="results CSV files")
    p.add_argument("--axis", required=True, help="hyperparameter name to order by")
    _common_flags(p)
    p.set_defaults(func=cmd_sweep_collect)

    p = subs.add_parser("subsample", help="balanced same-size index assignment")
    p.add_argument(
        "--dataset",
        action="append",
        required=True,
        metavar="NAME=SIZE|NAME=FILE.npy",
        help="dataset name with its row count or embedding file (repeatable)",
    )
    _common_flags(p)
    p.set_defaults(func=cmd_subsample)

    p = subs.add_parser("validate-balance", help="check group x class counts")
    p.add_argument("--metadata", required=True, help="sample records (JSONL)")
    p.add_argument("--expected-per-cell", type=int, required=True)
    _common_flags(p)
    p.set_defaults(func=cmd_validate_balance)

    p = subs.add_parser("render", help="figure from a results CSV")
    p.add_argument("--results", required=True, help="results CSV")
    p.add_argument(
        "--plot",
        required=True,
        choices=("pareto", "radar", "rank-table", "scatter", "category-scatter"),
    )
    p.add_argument("--x-metric", help="pareto/scatter x axis")
    p.add_argument("--y-metric", help="pareto/scatter y axis")
    p.add_argument("--metric", help="radar/category-scatter metric")
    p.add_argument("--axis", help="pareto: hyperparameter labeling the points")
    p.add_argument("--model", help="pareto: restrict to one model")
    p.add_argument("--dataset", help="pareto: restrict to one dataset")
    p.add_argument("--models", help="radar: comma-separated series (default: all present)")
    p.add_argument("--normalized", action="store_true", help="radar: shared [0,1] rim")
    _common_flags(p)
    p.set_defaults(func=cmd_render)

    return parser


# ---------------------------------------------------------------------------
# compute


def _parse_hyper_flags(pairs) -> tuple:
    out = []
    for item in pairs:
        name, sep, value = item.partition("=")
        if not sep or not name or not value:
            raise SpecError(f"--hyper needs NAME=VALUE, got {item!r}")
        out.append((name, value))
    return tuple(out)


def _batches(n: int, size: int):
    for start in range(0, n, size):
        yield start, min(start + size, n)


def _dsg_sample_scores(records, answers: dict) -> np.ndarray:
    scores = np.empty(len(records), dtype=np.float64)
    for i, rec in enumerate(records):
        if rec.dsg_graph is None:
            raise DataError(f"record {i}: no question graph in metadata")
        if i not in answers:
            raise DataError(f"record {i}: no answers")
        scores[i] = dsg_score(DsgAnswers(graph=rec.dsg_graph, answers=answers[i]))
    return scores


def cmd_compute(args) -> int:
    if args.out is None:
        raise SpecError("compute needs --out for the results CSV")
    if args.batch_size < 1:
        raise SpecError("--batch-size must be >= 1")
    hypers = _parse_hyper_flags(args.hyper)  # reject bad flags before any file I/O
    metric = args.metric
    records = None
    if args.metadata:
        records = load_metadata(args.metadata)
    if args.grouped and records is None:
        raise SpecError("--grouped needs --metadata for the group tags")

    spec = MetricSpec(
        kind=metric,
        k=args.k if metric == "prdc" else None,
        scale=args.scale if metric == "clipscore" else None,
        grouped=args.grouped,
    )
    state = new_state(spec)

    def recs_slice(lo, hi):
        return records[lo:hi] if args.grouped else None

    if metric in MARGINAL_KINDS:
        if not args.real or not args.gen:
            raise SpecError(f"{metric} needs --real and --gen")
        real = load_embeddings(args.real).data
        gen = load_embeddings(args.gen).data
        if args.grouped:
            for arr, label in ((real, "--real"), (gen, "--gen")):
                if arr.shape[0] != len(records):
                    raise DataError(
                        f"{label} has {arr.shape[0]} rows, metadata has {len(records)}"
                    )
        for lo, hi in _batches(real.shape[0], args.batch_size):
            state.update_real(real[lo:hi], recs_slice(lo, hi))
        for lo, hi in _batches(gen.shape[0], args.batch_size):
            state.update_generated(gen[lo:hi], recs_slice(lo, hi))
    else:
        if metric == "clipscore":
            if not args.image_embeddings or not args.text_embeddings:
                raise SpecError("clipscore needs --image-embeddings and --text-embeddings")
            img = load_embeddings(args.image_embeddings).data
            txt = load_embeddings(args.text_embeddings).data
            if img.shape[0] != txt.shape[0]:
                raise DataError(
                    f"--image-embeddings has {img.shape[0]} rows, --text-embeddings has {txt.shape[0]}"
                )
            scores = None
            n = img.shape[0]
        elif metric == "vqascore":
            if not args.vqa_scores:
                raise SpecError("vqascore needs --vqa-scores")
            scores = np.asarray(vqa_scores(load_score_csv(args.vqa_scores, "vqa").scores))
            n = len(scores)
        else:
            if not args.dsg_answers:
                raise SpecError("dsg needs --dsg-answers and --metadata")
            if records is None:
                raise SpecError("dsg needs --metadata for the question graphs")
            scores = _dsg_sample_scores(records, load_dsg_answers(args.dsg_answers))
            n = len(scores)
        if args.grouped and n != len(records):
            raise DataError(f"scores have {n} rows, metadata has {len(records)}")
        for lo, hi in _batches(n, args.batch_size):
            if metric == "clipscore":
                batch = clip_scores(img[lo:hi], txt[lo:hi], args.scale)
            else:
                batch = scores[lo:hi]
            state.update_generated(batch, recs_slice(lo, hi))

    rows = []
    for name, by_group in sorted(state.compute().items()):
        for group in sorted(by_group):
            rows.append(
                ResultRow(
                    model=args.model,
                    dataset=args.dataset,
                    group=group,
                    hyperparameters=hypers,
                    metric=name,
                    value=by_group[group],
                    seed=args.seed,
                )
            )
    if os.path.exists(args.out):
        append_results(rows, args.out)
    else:
        write_results(rows, args.out)
    for row in rows:
        tag = row.metric if row.group == ALL_GROUP else f"{row.metric}[{row.group}]"
        print(f"{tag}={row.value!r}")
    return 0


# ---------------------------------------------------------------------------
# exercise


def cmd_exercise(args) -> int:
    overrides = {
        "kind": args.kind,
        "seed": args.seed,
        "out": args.out,
        "workers": args.workers,
        "metrics": args.metrics,
        "k": args.k,
        "scale": args.scale,
    }
    cfg = load_config(args.config, overrides)
    out_dir = run_exercise(cfg)
    print(out_dir)
    return 0


# ---------------------------------------------------------------------------
# sweep-collect


def _axis_key(row: ResultRow, axis: str) -> tuple:
    value = row.hyper(axis)
    if value is None:
        return (0, 0.0, "")
    try:
        return (1, float(value), "")
    except ValueError:
        return (2, 0.0, value)


def cmd_sweep_collect(args) -> int:
    if args.out is None:
        raise SpecError("sweep-collect needs --out for the merged CSV")
    merged: dict = {}
    for path in args.files:
        for row in read_results(path):
            key = row.key()
            if key in merged:
                if merged[key].value != row.value:
                    raise ConflictError(
                        f"{path}: key {key} has value {row.value!r}, "
                        f"already collected {merged[key].value!r}"
                    )
                continue
            merged[key] = row

    axis = args.axis

    def order(row: ResultRow) -> tuple:
        return (row.model, row.dataset, row.metric) + _axis_key(row, axis) + (
            row.group,
            -1 if row.seed is None else row.seed,
        )

    write_results(merged.values(), args.out, order=order)
    print(f"{len(merged)} rows")
    return 0


# ---------------------------------------------------------------------------
# subsample / validate-balance


def cmd_subsample(args) -> int:
    if args.out is None:
        raise SpecError("subsample needs --out for the assignment CSV")
    sizes = []
    for item in args.dataset:
        name, sep, value = item.partition("=")
        if not sep or not name or not value:
            raise SpecError(f"--dataset needs NAME=SIZE or NAME=FILE.npy, got {item!r}")
        try:
            size = int(value)
        except ValueError:
            size = load_embeddings(value).n
        sizes.append((name, size))
    assignment = balanced_subsample(sizes, args.seed if args.seed is not None else 0)
    write_assignment(assignment, args.out)
    print(f"target={assignment.target_size}")
    return 0


def cmd_validate_balance(args) -> int:
    records = load_metadata(args.metadata)
    report = validate_balance(records, args.expected_per_cell)
    if report.unkeyed:
        print(f"unkeyed rows: {report.unkeyed}", file=sys.stderr)
    if report.valid:
        print(f"balanced: total={report.total} expected_per_cell={report.expected_per_cell}")
        return 0
    for group, label, count in report.mismatched:
        print(
            f"cell ({group}, {label}): {count} rows, expected {report.expected_per_cell}",
            file=sys.stderr,
        )
    return 1


# ---------------------------------------------------------------------------
# render


def _pareto_from_rows(rows, args) -> ParetoPlotData:
    for flag, value in (("--x-metric", args.x_metric), ("--y-metric", args.y_metric), ("--axis", args.axis)):
        if not value:
            raise SpecError(f"pareto needs {flag}")
    for metric in (args.x_metric, args.y_metric):
        if metric not in DEFAULT_DIRECTIONS:
            raise SpecError(f"no direction declared for metric {metric!r}")
    per_label: dict = {}
    for row in rows:
        if row.group != ALL_GROUP or row.metric not in (args.x_metric, args.y_metric):
            continue
        if args.model and row.model != args.model:
            continue
        if args.dataset and row.dataset != args.dataset:
            continue
        label = row.hyper(args.axis)
        if label is None:
            continue
        slot = per_label.setdefault(label, {})
        if row.metric in slot:
            raise DataError(f"multiple {row.metric} values for {args.axis}={label}")
        slot[row.metric] = row.value
    if not per_label:
        raise DataError(f"no rows carry hyperparameter {args.axis!r}")
    points = []
    for label in sorted(per_label, key=lambda s: ((0, float(s), "") if _is_float(s) else (1, 0.0, s))):
        slot = per_label[label]
        for metric in (args.x_metric, args.y_metric):
            if metric not in slot:
                raise DataError(f"missing {metric} value for {args.axis}={label}")
        points.append(
            ParetoPoint(
                objectives=(
                    (args.x_metric, slot[args.x_metric], DEFAULT_DIRECTIONS[args.x_metric]),
                    (args.y_metric, slot[args.y_metric], DEFAULT_DIRECTIONS[args.y_metric]),
                ),
                label=label,
            )
        )
    return ParetoPlotData.from_points(points)


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def cmd_render(args) -> int:
    if args.out is None:
        raise SpecError("render needs --out for the SVG file")
    rows = read_results(args.results)
    if args.plot == "pareto":
        data = _pareto_from_rows(rows, args)
    elif args.plot == "radar":
        if not args.metric:
            raise SpecError("radar needs --metric")
        if args.models:
            models = [m for m in args.models.split(",") if m]
        else:
            models = sorted({r.model for r in rows})
        data = radar_data(rows, args.metric, models)
    elif args.plot == "rank-table":
        data = rank_table(rows)
    elif args.plot == "scatter":
        if not args.x_metric or not args.y_metric:
            raise SpecError("scatter needs --x-metric and --y-metric")
        data = scatter_data(rows, args.x_metric, args.y_metric)
    else:
        if not args.metric:
            raise SpecError("category-scatter needs --metric")
        data = category_scatter_data(rows, args.metric)

    base = args.out[: -len(".svg")] if args.out.endswith(".svg") else args.out
    svg_path = base + ".svg"
    svgplot.write_svg(svgplot.render_svg(data, normalized=args.normalized), svg_path)
    with open(base + ".jsonl", "w", encoding="utf-8") as fh:
        for record in plot_records(data):
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    figures.render_png(data, base + ".png", normalized=args.normalized)
    print(svg_path)
    return 0


# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EvalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
