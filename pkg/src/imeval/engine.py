"""Mergeable metric states: batch updates, worker merging, final compute.

A MetricState accumulates batches of real and generated data, can be
merged with states built on other shards, and produces a report mapping
metric name -> group -> value. The contract is data parallelism by
sharding rows across states and merging, never concurrent mutation of a
single state.

Accumulator layouts per metric kind:

* fid         — streaming (sum x, sum x x^T, count) per side per group, so
                merge is O(D^2) and covariance is reconstructed at compute
                time with the n-1 divisor.
* prdc        — retained embedding row buffers per side per group (the
                manifold construction needs exact point sets).
* clipscore / vqascore / dsg
              — retained per-sample scores per group, generated side only.

Grouped states attribute every row to each of its group tags and to ALL;
ungrouped states keep only ALL. Reports of the consistency kinds sort the
retained scores before reducing, which makes compute() exactly invariant
to how rows were partitioned across states.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .consistency import DEFAULT_CLIP_SCALE
from .data_model import ALL_GROUP, EmbeddingSet, ScoreTable
from .errors import ContractError, InsufficientSamples, ShapeError, SpecError
from .marginal import DEFAULT_K, compute_prdc, fit_gaussian, frechet_distance, GaussianMoments

MARGINAL_KINDS = ("fid", "prdc")
CONSISTENCY_KINDS = ("clipscore", "vqascore", "dsg")
METRIC_KINDS = MARGINAL_KINDS + CONSISTENCY_KINDS

# Report column names emitted per metric kind.
REPORT_NAMES = {
    "fid": ("fid",),
    "prdc": ("precision", "recall", "density", "coverage"),
    "clipscore": ("clipscore",),
    "vqascore": ("vqascore",),
    "dsg": ("dsg",),
}


@dataclass(frozen=True)
class MetricSpec:
    kind: str
    k: Optional[int] = None
    scale: Optional[float] = None
    grouped: bool = False

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise SpecError(f"unknown metric kind {self.kind!r}")
        if self.k is not None:
            if self.kind != "prdc":
                raise SpecError(f"k is only valid for prdc, not {self.kind}")
            if self.k < 1:
                raise SpecError(f"k must be >= 1, got {self.k}")
        if self.scale is not None and self.kind != "clipscore":
            raise SpecError(f"scale is only valid for clipscore, not {self.kind}")

    @property
    def effective_k(self) -> int:
        return DEFAULT_K if self.k is None else self.k

    @property
    def effective_scale(self) -> float:
        return DEFAULT_CLIP_SCALE if self.scale is None else self.scale


class _MomentAcc:
    """Streaming first/second moment sums for one group and side."""

    __slots__ = ("sum", "sumsq", "count")

    def __init__(self):
        self.sum = None  # (D,)
        self.sumsq = None  # (D, D)
        self.count = 0

    def add(self, x: np.ndarray) -> None:
        if self.sum is None:
            self.sum = np.zeros(x.shape[1], dtype=np.float64)
            self.sumsq = np.zeros((x.shape[1], x.shape[1]), dtype=np.float64)
        elif self.sum.shape[0] != x.shape[1]:
            raise ShapeError(f"feature dimension changed: {self.sum.shape[0]} -> {x.shape[1]}")
        self.sum += x.sum(axis=0)
        self.sumsq += x.T @ x
        self.count += x.shape[0]

    def merge(self, other: "_MomentAcc") -> None:
        if other.sum is None:
            return
        if self.sum is None:
            self.sum = other.sum.copy()
            self.sumsq = other.sumsq.copy()
            self.count = other.count
            return
        if self.sum.shape != other.sum.shape:
            raise ShapeError("cannot merge moment accumulators of different dimension")
        self.sum += other.sum
        self.sumsq += other.sumsq
        self.count += other.count

    def moments(self) -> GaussianMoments:
        n = self.count
        mean = self.sum / n
        cov = (self.sumsq - n * np.outer(mean, mean)) / (n - 1)
        cov = (cov + cov.T) / 2.0
        return GaussianMoments(mean=mean, cov=cov, n=n)


class MetricState:
    """Accumulator for one MetricSpec. Single-writer; merge to combine."""

    def __init__(self, spec: MetricSpec):
        self.spec = spec
        # group -> accumulator; layout depends on spec.kind (see module doc)
        self._real: dict = {}
        self._gen: dict = {}

    # -- bookkeeping ------------------------------------------------------

    def _group_tags(self, records, n_rows: int):
        """Yield (group, row index array) pairs for one batch."""
        if records is not None and len(records) != n_rows:
            raise ShapeError(f"{n_rows} rows vs {len(records)} records")
        yield ALL_GROUP, np.arange(n_rows)
        if not self.spec.grouped:
            return
        if records is None:
            raise ContractError("grouped metric updates require sample records")
        members: dict = {}
        for i, rec in enumerate(records):
            for g in rec.groups:
                members.setdefault(g, []).append(i)
        for g in sorted(members):
            yield g, np.array(members[g], dtype=np.intp)

    def real_count(self, group: str = ALL_GROUP) -> int:
        return self._side_count(self._real, group)

    def generated_count(self, group: str = ALL_GROUP) -> int:
        return self._side_count(self._gen, group)

    def _side_count(self, side: dict, group: str) -> int:
        acc = side.get(group)
        if acc is None:
            return 0
        if isinstance(acc, _MomentAcc):
            return acc.count
        return sum(len(a) for a in acc)

    # -- updates ----------------------------------------------------------

    def update_real(self, embeddings: EmbeddingSet, records=None) -> None:
        if self.spec.kind not in MARGINAL_KINDS:
            raise ContractError(f"{self.spec.kind} takes no real references")
        self._update_side(self._real, embeddings, records)

    def update_generated(self, data, records=None) -> None:
        if self.spec.kind in MARGINAL_KINDS:
            self._update_side(self._gen, data, records)
            return
        scores = data.scores if isinstance(data, ScoreTable) else np.asarray(data, dtype=np.float64)
        scores = scores.reshape(-1)
        for g, idx in self._group_tags(records, len(scores)):
            self._gen.setdefault(g, []).append(scores[idx])

    def _update_side(self, side: dict, embeddings: EmbeddingSet, records) -> None:
        if not isinstance(embeddings, EmbeddingSet):
            embeddings = EmbeddingSet(np.asarray(embeddings))
        x = embeddings.data
        for g, idx in self._group_tags(records, x.shape[0]):
            rows = x[idx]
            if self.spec.kind == "fid":
                side.setdefault(g, _MomentAcc()).add(rows)
            else:
                side.setdefault(g, []).append(rows.copy())

    # -- merge / compute ---------------------------------------------------

    def merge(self, other: "MetricState") -> "MetricState":
        if self.spec != other.spec:
            raise SpecError(f"cannot merge states with specs {self.spec} and {other.spec}")
        out = MetricState(self.spec)
        for target, a, b in ((out._real, self._real, other._real), (out._gen, self._gen, other._gen)):
            for g in list(a) + [g for g in b if g not in a]:
                left = a.get(g)
                right = b.get(g)
                if self.spec.kind == "fid":
                    acc = _MomentAcc()
                    if left is not None:
                        acc.merge(left)
                    if right is not None:
                        acc.merge(right)
                    target[g] = acc
                else:
                    target[g] = [arr.copy() for arr in (left or [])] + [
                        arr.copy() for arr in (right or [])
                    ]
        return out

    def compute(self) -> dict:
        """Report: metric name -> group -> value.

        Grouped marginal metrics compare each group's generated rows
        against that same group's real rows.
        """
        kind = self.spec.kind
        groups = self._report_groups()
        report: dict = {name: {} for name in REPORT_NAMES[kind]}
        for g in groups:
            if kind == "fid":
                report["fid"][g] = self._compute_fid(g)
            elif kind == "prdc":
                for name, value in self._compute_prdc(g).items():
                    report[name][g] = value
            else:
                report[kind][g] = self._compute_consistency(g)
        return report

    def _report_groups(self) -> list:
        keys = set(self._gen) | (set(self._real) if self.spec.kind in MARGINAL_KINDS else set())
        keys.add(ALL_GROUP)
        if not self.spec.grouped:
            return [ALL_GROUP]
        return [ALL_GROUP] + sorted(k for k in keys if k != ALL_GROUP)

    def _compute_fid(self, group: str) -> float:
        for side, label in ((self._real, "real"), (self._gen, "generated")):
            if self._side_count(side, group) < 2:
                raise InsufficientSamples(
                    f"fid needs at least 2 {label} rows in group {group!r}, "
                    f"got {self._side_count(side, group)}",
                    group=group,
                )
        return frechet_distance(self._real[group].moments(), self._gen[group].moments())

    def _compute_prdc(self, group: str) -> dict:
        k = self.spec.effective_k
        for side, label in ((self._real, "real"), (self._gen, "generated")):
            if self._side_count(side, group) < k + 1:
                raise InsufficientSamples(
                    f"prdc with k={k} needs at least {k + 1} {label} rows in group {group!r}, "
                    f"got {self._side_count(side, group)}",
                    group=group,
                )
        real = EmbeddingSet(np.concatenate(self._real[group], axis=0))
        gen = EmbeddingSet(np.concatenate(self._gen[group], axis=0))
        return compute_prdc(real, gen, k).as_dict()

    def _compute_consistency(self, group: str) -> float:
        if self._side_count(self._gen, group) < 1:
            raise InsufficientSamples(f"no scores in group {group!r}", group=group)
        scores = np.concatenate(self._gen[group])
        # sorting pins the reduction order no matter how rows were sharded
        return float(np.sort(scores).sum() / len(scores))


def new_state(spec: MetricSpec) -> MetricState:
    return MetricState(spec)


def update_real(state: MetricState, embeddings: EmbeddingSet, records=None) -> None:
    state.update_real(embeddings, records)


def update_generated(state: MetricState, data, records=None) -> None:
    state.update_generated(data, records)


def merge(a: MetricState, b: MetricState) -> MetricState:
    return a.merge(b)


def compute(state: MetricState) -> dict:
    return state.compute()


def fit_moments(state: MetricState, group: str = ALL_GROUP, side: str = "real") -> GaussianMoments:
    """Reconstructed Gaussian moments from a fid state's accumulators."""
    if state.spec.kind != "fid":
        raise ContractError("moments are only tracked for fid states")
    accs = state._real if side == "real" else state._gen
    if group not in accs or accs[group].count < 2:
        raise InsufficientSamples(f"not enough rows in group {group!r}", group=group)
    return accs[group].moments()
