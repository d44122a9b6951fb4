"""Core domain types and file readers/writers.

Covers the four on-disk surfaces everything else consumes:

* embedding files  — a strict subset of the ``.npy`` version 1.0 layout
  (little-endian float32/float64, C order, 2-D); anything else is rejected
* metadata files   — UTF-8 line-delimited JSON records
* score files      — ``index,score`` CSV, or line-delimited JSON for
  question-graph answers
* results files    — one CSV schema consumed by every visualization

All loaders are pure functions returning immutable-by-convention values;
internal arithmetic is float64 regardless of on-disk width.
"""

from __future__ import annotations

import ast
import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (
    DataError,
    DuplicateResultError,
    FormatError,
    GraphError,
    UnsupportedLayout,
)

RESULTS_HEADER = ["model", "dataset", "group", "hyperparameters", "metric", "value", "seed"]

# Group key for the undisaggregated aggregate.
ALL_GROUP = "ALL"

_NPY_MAGIC = b"\x93NUMPY"


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class EmbeddingSet:
    """An N x D matrix of finite feature-space coordinates (float64)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise UnsupportedLayout(f"embeddings must be 2-D, got {arr.ndim}-D")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataError(f"embeddings need n >= 1 and d >= 1, got shape {arr.shape}")
        bad = ~np.isfinite(arr)
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise DataError(f"non-finite embedding value at row {r}, col {c}")
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class DsgGraph:
    """Question identifiers plus an acyclic parent relation between them."""

    question_ids: tuple
    parents: dict

    def __post_init__(self):
        ids = tuple(self.question_ids)
        known = set(ids)
        if len(known) != len(ids):
            raise GraphError("duplicate question ids")
        parents = {q: tuple(ps) for q, ps in self.parents.items()}
        for q, ps in parents.items():
            if q not in known:
                raise GraphError(f"parents listed for unknown question {q!r}")
            for p in ps:
                if p not in known:
                    raise GraphError(f"question {q!r} references unknown parent {p!r}")
        cycle = _find_cycle(ids, parents)
        if cycle:
            raise GraphError(f"dependency cycle {cycle}", cycle=cycle)
        object.__setattr__(self, "question_ids", ids)
        object.__setattr__(self, "parents", parents)

    def topological_order(self) -> list:
        """Question ids ordered so every parent precedes its children."""
        indegree = {q: len(self.parents.get(q, ())) for q in self.question_ids}
        children: dict = {q: [] for q in self.question_ids}
        for q in self.question_ids:
            for p in self.parents.get(q, ()):
                children[p].append(q)
        ready = [q for q in self.question_ids if indegree[q] == 0]
        order = []
        while ready:
            q = ready.pop(0)
            order.append(q)
            for c in children[q]:
                indegree[c] -= 1
                if indegree[c] == 0:
                    ready.append(c)
        return order


def _find_cycle(ids, parents):
    """Return one dependency cycle as a list of ids, or None."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {q: WHITE for q in ids}
    stack: list = []

    def visit(q):
        color[q] = GRAY
        stack.append(q)
        for p in parents.get(q, ()):
            if color[p] == GRAY:
                i = stack.index(p)
                return stack[i:]
            if color[p] == WHITE:
                found = visit(p)
                if found:
                    return found
        stack.pop()
        color[q] = BLACK
        return None

    for q in ids:
        if color[q] == WHITE:
            found = visit(q)
            if found:
                return found
    return None


@dataclass(frozen=True)
class SampleRecord:
    """Per-sample metadata aligned by row position with an embedding file."""

    index: int
    prompt: Optional[str] = None
    class_label: Optional[str] = None
    groups: tuple = ()
    dsg_graph: Optional[DsgGraph] = None

    def __post_init__(self):
        groups = tuple(self.groups)
        for g in groups:
            if not isinstance(g, str) or not g:
                raise DataError(f"group tags must be non-empty strings, got {g!r} at index {self.index}")
        object.__setattr__(self, "groups", groups)


@dataclass(frozen=True)
class ScoreTable:
    """Per-sample scores aligned by index to a metadata table."""

    kind: str  # clip | vqa | dsg
    scores: np.ndarray

    def __post_init__(self):
        if self.kind not in ("clip", "vqa", "dsg"):
            raise DataError(f"unknown score kind {self.kind!r}")
        arr = np.asarray(self.scores, dtype=np.float64).reshape(-1)
        if not np.isfinite(arr).all():
            i = int(np.argwhere(~np.isfinite(arr))[0][0])
            raise DataError(f"non-finite score at index {i}")
        object.__setattr__(self, "scores", arr)

    def __len__(self) -> int:
        return len(self.scores)


@dataclass(frozen=True)
class ResultRow:
    """One (model, dataset, group, hyperparameters, metric) measurement."""

    model: str
    dataset: str
    group: str
    hyperparameters: tuple  # ordered ((key, value), ...) pairs, both str
    metric: str
    value: float
    seed: Optional[int] = None

    def __post_init__(self):
        hp = tuple((str(k), str(v)) for k, v in self.hyperparameters)
        for k, v in hp:
            if not k or "=" in k or ";" in k:
                raise DataError(f"bad hyperparameter key {k!r}")
            if "=" in v or ";" in v:
                raise DataError(f"bad hyperparameter value {v!r} for key {k!r}")
        object.__setattr__(self, "hyperparameters", hp)
        object.__setattr__(self, "value", float(self.value))

    def key(self) -> tuple:
        """Uniqueness key within one results file."""
        return (self.model, self.dataset, self.group, self.hyperparameters, self.metric, self.seed)

    def hyper(self, name: str) -> Optional[str]:
        for k, v in self.hyperparameters:
            if k == name:
                return v
        return None


def format_hyperparameters(pairs) -> str:
    return ";".join(f"{k}={v}" for k, v in pairs)


def parse_hyperparameters(text: str) -> tuple:
    if not text:
        return ()
    out = []
    for part in text.split(";"):
        if "=" not in part:
            raise FormatError(f"bad hyperparameter field {text!r}")
        k, v = part.split("=", 1)
        out.append((k, v))
    return tuple(out)


# ---------------------------------------------------------------------------
# Embedding files (.npy version 1.0 subset)


def load_embeddings(path) -> EmbeddingSet:
    """Read a 2-D little-endian float32/float64 C-order ``.npy`` file.

    Exactly the version 1.0 layout with descr ``<f4``/``<f8`` is accepted;
    values are widened to float64 internally.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 10 or raw[:6] != _NPY_MAGIC:
        raise FormatError(f"{path}: bad magic bytes")
    major, minor = raw[6], raw[7]
    if (major, minor) != (1, 0):
        raise FormatError(f"{path}: unsupported format version {major}.{minor}")
    (header_len,) = struct.unpack("<H", raw[8:10])
    header_end = 10 + header_len
    if len(raw) < header_end:
        raise FormatError(f"{path}: truncated header")
    try:
        header = ast.literal_eval(raw[10:header_end].decode("latin1").strip())
    except (ValueError, SyntaxError) as exc:
        raise FormatError(f"{path}: unparseable header") from exc
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise FormatError(f"{path}: unexpected header keys")
    descr = header["descr"]
    if descr not in ("<f4", "<f8"):
        raise FormatError(f"{path}: unsupported descr {descr!r}")
    if header["fortran_order"]:
        raise UnsupportedLayout(f"{path}: column-major layout is not supported")
    shape = header["shape"]
    if not (
        isinstance(shape, tuple)
        and len(shape) == 2
        and all(isinstance(s, int) and s >= 0 for s in shape)
    ):
        raise UnsupportedLayout(f"{path}: expected a 2-D shape, got {shape!r}")
    n, d = shape
    itemsize = 4 if descr == "<f4" else 8
    expected = n * d * itemsize
    payload = raw[header_end:]
    if len(payload) != expected:
        raise FormatError(f"{path}: payload is {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype=np.dtype(descr)).reshape(n, d)
    if n < 1 or d < 1:
        raise DataError(f"{path}: embeddings need n >= 1 and d >= 1, got shape ({n}, {d})")
    wide = values.astype(np.float64)
    bad = ~np.isfinite(wide)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise DataError(f"{path}: non-finite value at row {r}, col {c}")
    return EmbeddingSet(wide)


def write_embeddings(array, path) -> None:
    """Write a 2-D float array in the accepted ``.npy`` subset.

    float32 input stays float32 on disk; anything else is stored float64.
    The header is padded with spaces so the payload starts on a 64-byte
    boundary, matching common writers.
    """
    if isinstance(array, EmbeddingSet):
        array = array.data
    arr = np.ascontiguousarray(array)
    if arr.ndim != 2:
        raise UnsupportedLayout(f"can only write 2-D arrays, got {arr.ndim}-D")
    if arr.dtype == np.float32:
        descr = "<f4"
    else:
        arr = arr.astype(np.float64)
        descr = "<f8"
    header = "{'descr': '%s', 'fortran_order': False, 'shape': (%d, %d), }" % (
        descr,
        arr.shape[0],
        arr.shape[1],
    )
    # magic(6) + version(2) + header-length(2) + header + '\n', padded to 64
    unpadded = 10 + len(header) + 1
    pad = (64 - unpadded % 64) % 64
    header_bytes = (header + " " * pad + "\n").encode("latin1")
    with open(path, "wb") as fh:
        fh.write(_NPY_MAGIC)
        fh.write(bytes([1, 0]))
        fh.write(struct.pack("<H", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(arr.tobytes(order="C"))


# ---------------------------------------------------------------------------
# Metadata files (line-delimited JSON)


def load_metadata(path) -> list:
    """Read one SampleRecord per line; index is the line position.

    An explicit ``index`` field is allowed but must match the line position,
    so duplicated or shuffled indices surface as DataError. Unknown fields
    are ignored.
    """
    records = []
    with open(path, encoding="utf-8") as fh:
        for pos, line in enumerate(fh):
            line = line.strip()
            if not line:
                raise DataError(f"{path}: blank line at record {pos}")
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: bad JSON at record {pos}: {exc}") from exc
            if not isinstance(obj, dict):
                raise DataError(f"{path}: record {pos} is not an object")
            if "index" in obj and int(obj["index"]) != pos:
                raise DataError(
                    f"{path}: explicit index {obj['index']} at line {pos} "
                    "(duplicate or out-of-order index)"
                )
            dsg = None
            if obj.get("dsg") is not None:
                d = obj["dsg"]
                try:
                    dsg = DsgGraph(tuple(d.get("questions", ())), dict(d.get("parents", {})))
                except GraphError as exc:
                    raise GraphError(f"{path}: record {pos}: {exc}", cycle=exc.cycle) from exc
            records.append(
                SampleRecord(
                    index=pos,
                    prompt=obj.get("prompt"),
                    class_label=obj.get("class_label"),
                    groups=tuple(obj.get("groups", ())),
                    dsg_graph=dsg,
                )
            )
    return records


def write_metadata(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            obj: dict = {}
            if rec.prompt is not None:
                obj["prompt"] = rec.prompt
            if rec.class_label is not None:
                obj["class_label"] = rec.class_label
            if rec.groups:
                obj["groups"] = list(rec.groups)
            if rec.dsg_graph is not None:
                obj["dsg"] = {
                    "questions": list(rec.dsg_graph.question_ids),
                    "parents": {q: list(ps) for q, ps in rec.dsg_graph.parents.items() if ps},
                }
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Score files


def load_score_csv(path, kind: str) -> ScoreTable:
    """Read an ``index,score`` CSV; indices must cover 0..N-1 exactly."""
    by_index: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["index", "score"]:
            raise FormatError(f"{path}: expected header 'index,score', got {header}")
        for row in reader:
            if len(row) != 2:
                raise FormatError(f"{path}: bad row {row}")
            i = int(row[0])
            if i in by_index:
                raise DataError(f"{path}: duplicate index {i}")
            by_index[i] = float(row[1])
    if not by_index:
        raise DataError(f"{path}: empty score file")
    n = len(by_index)
    if set(by_index) != set(range(n)):
        missing = sorted(set(range(n)) - set(by_index))[:5]
        raise DataError(f"{path}: indices do not cover 0..{n - 1} (missing {missing})")
    return ScoreTable(kind, np.array([by_index[i] for i in range(n)], dtype=np.float64))


def write_score_csv(scores, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "score"])
        for i, s in enumerate(np.asarray(scores, dtype=np.float64)):
            writer.writerow([i, repr(float(s))])


def load_dsg_answers(path) -> dict:
    """Read line-delimited answer records: {index, answers: {id: yes|no}}.

    Returns {index: {question id: bool}}. Optional per-question
    probabilities are accepted and ignored here (they ride along for
    callers that want them).
    """
    answers: dict = {}
    with open(path, encoding="utf-8") as fh:
        for pos, line in enumerate(fh):
            line = line.strip()
            if not line:
                raise DataError(f"{path}: blank line at record {pos}")
            obj = json.loads(line)
            i = int(obj["index"])
            if i in answers:
                raise DataError(f"{path}: duplicate answers for index {i}")
            amap = {}
            for q, a in obj.get("answers", {}).items():
                if a not in ("yes", "no"):
                    raise DataError(f"{path}: index {i}: answer for {q!r} must be 'yes' or 'no'")
                amap[q] = a == "yes"
            answers[i] = amap
    return answers


# ---------------------------------------------------------------------------
# Results CSV


def _row_sort_key(row: ResultRow) -> tuple:
    return (
        row.model,
        row.dataset,
        row.metric,
        row.group,
        format_hyperparameters(row.hyperparameters),
        -1 if row.seed is None else row.seed,
    )


def _check_unique(rows) -> None:
    seen: dict = {}
    for row in rows:
        k = row.key()
        if k in seen:
            raise DuplicateResultError(f"duplicate result key {k}")
        seen[k] = row


def write_results(rows, path, order=None) -> None:
    """Write the results CSV with the fixed header in deterministic order.

    `order` swaps in an alternative sort key (the sweep collector orders
    by axis value); the default is the canonical row order.
    """
    rows = list(rows)
    _check_unique(rows)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULTS_HEADER)
        for row in sorted(rows, key=order or _row_sort_key):
            writer.writerow(
                [
                    row.model,
                    row.dataset,
                    row.group,
                    format_hyperparameters(row.hyperparameters),
                    row.metric,
                    repr(row.value),
                    "" if row.seed is None else str(row.seed),
                ]
            )


def append_results(rows, path) -> None:
    """Append rows, re-checking key uniqueness against the existing file.

    The file is rewritten so the deterministic sort order is preserved.
    """
    existing = read_results(path) if Path(path).exists() else []
    merged = existing + list(rows)
    _check_unique(merged)
    write_results(merged, path)


def read_results(path) -> list:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != RESULTS_HEADER:
            raise FormatError(f"{path}: bad results header {header}")
        for raw in reader:
            if len(raw) != len(RESULTS_HEADER):
                raise FormatError(f"{path}: bad row {raw}")
            model, dataset, group, hyper, metric, value, seed = raw
            rows.append(
                ResultRow(
                    model=model,
                    dataset=dataset,
                    group=group,
                    hyperparameters=parse_hyperparameters(hyper),
                    metric=metric,
                    value=float(value),
                    seed=int(seed) if seed else None,
                )
            )
    return rows
