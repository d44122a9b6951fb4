"""Per-sample image-text consistency scores and group aggregation.

Three score sources, all reference-free:

* clip  — cosine similarity between paired image/text embeddings, clamped
          at zero and scaled (the model inference that produced the
          embeddings happens upstream).
* dsg   — fraction of dependency-valid "yes" answers over a question
          graph; a "no" anywhere invalidates every descendant question.
* vqa   — model-reported probability of "yes", validated and passed
          through.

Aggregation reduces any ScoreTable to per-group means (or percentiles).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import ALL_GROUP, DsgGraph, EmbeddingSet, ScoreTable
from .errors import DataError, ShapeError

DEFAULT_CLIP_SCALE = 100.0


@dataclass(frozen=True)
class ClipPair:
    """One image embedding paired with its prompt embedding."""

    image_embedding: np.ndarray
    text_embedding: np.ndarray

    def __post_init__(self):
        img = np.asarray(self.image_embedding, dtype=np.float64).reshape(-1)
        txt = np.asarray(self.text_embedding, dtype=np.float64).reshape(-1)
        if img.shape != txt.shape:
            raise ShapeError(f"embedding dimension mismatch: {img.shape} vs {txt.shape}")
        object.__setattr__(self, "image_embedding", img)
        object.__setattr__(self, "text_embedding", txt)


@dataclass(frozen=True)
class DsgAnswers:
    """Raw yes/no answers covering every question of a graph."""

    graph: DsgGraph
    answers: dict  # question id -> bool

    def __post_init__(self):
        ids = set(self.graph.question_ids)
        missing = sorted(ids - set(self.answers))
        if missing:
            raise DataError(f"missing answers for questions {missing}")
        extra = sorted(set(self.answers) - ids)
        if extra:
            raise DataError(f"answers for unknown questions {extra}")


def clip_score(pair: ClipPair, scale: float = DEFAULT_CLIP_SCALE) -> float:
    """scale * max(0, cos(image, text)), cosine taken on normalized copies."""
    ni = float(np.linalg.norm(pair.image_embedding))
    nt = float(np.linalg.norm(pair.text_embedding))
    if ni == 0.0 or nt == 0.0:
        raise DataError("zero-norm embedding in clip pair")
    cos = float((pair.image_embedding / ni) @ (pair.text_embedding / nt))
    return scale * max(0.0, cos)


def clip_scores(image_embeddings, text_embeddings, scale: float = DEFAULT_CLIP_SCALE) -> ScoreTable:
    """Row-paired clip scores for two equally-shaped embedding sets."""
    img = image_embeddings.data if isinstance(image_embeddings, EmbeddingSet) else np.asarray(image_embeddings, dtype=np.float64)
    txt = text_embeddings.data if isinstance(text_embeddings, EmbeddingSet) else np.asarray(text_embeddings, dtype=np.float64)
    if img.shape != txt.shape:
        raise ShapeError(f"image/text embedding shape mismatch: {img.shape} vs {txt.shape}")
    out = np.empty(img.shape[0], dtype=np.float64)
    for i in range(img.shape[0]):
        try:
            out[i] = clip_score(ClipPair(img[i], txt[i]), scale)
        except DataError as exc:
            raise DataError(f"row {i}: {exc}") from exc
    return ScoreTable("clip", out)


def dsg_score(sample: DsgAnswers) -> float:
    """Fraction of questions whose effective answer is yes.

    A question's effective answer is false if its raw answer is false or
    any ancestor's effective answer is false; evaluated in topological
    order so invalidation is transitive.
    """
    graph = sample.graph
    effective: dict = {}
    for q in graph.topological_order():
        ok = bool(sample.answers[q])
        for p in graph.parents.get(q, ()):
            ok = ok and effective[p]
        effective[q] = ok
    total = len(graph.question_ids)
    if total == 0:
        raise DataError("empty question graph")
    return sum(effective.values()) / total


def vqa_scores(probabilities) -> list:
    """Validated pass-through of per-sample yes-probabilities."""
    out = []
    for i, p in enumerate(probabilities):
        p = float(p)
        if not (0.0 <= p <= 1.0):
            raise DataError(f"probability out of [0, 1] at index {i}: {p}")
        out.append(p)
    return out


def aggregate_scores(per_sample: ScoreTable, records, percentile: float | None = None) -> dict:
    """Group tag -> mean score (or a p-th percentile with linear
    interpolation when ``percentile`` is given), always including ALL.

    Samples carrying several group tags count toward each of them.
    Scores within each group are reduced in index order.
    """
    scores = per_sample.scores
    if len(scores) != len(records):
        raise ShapeError(f"{len(scores)} scores vs {len(records)} records")
    members: dict = {ALL_GROUP: list(range(len(records)))}
    for i, rec in enumerate(records):
        for g in rec.groups:
            members.setdefault(g, []).append(i)
    if percentile is not None and not (0.0 <= percentile <= 100.0):
        raise DataError(f"percentile must be in [0, 100], got {percentile}")
    out = {}
    for g, idx in members.items():
        vals = scores[np.array(idx, dtype=np.intp)]
        if percentile is None:
            out[g] = float(vals.mean())
        else:
            out[g] = float(np.percentile(vals, percentile, method="linear"))
    return out
