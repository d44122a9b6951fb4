"""Dataset balancing and partitioning.

The cross-dataset subsample is part of the external contract: given the
same seed and dataset names, any implementation of the documented
generator (FNV-1a name hash, SplitMix64 stream, partial Fisher-Yates)
produces the same index lists. See docs/formats.md for the byte-level
definition.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .data_model import ALL_GROUP
from .errors import DataError, FormatError, SpecError

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class DatasetHandle:
    name: str
    records: tuple

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    @property
    def size(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class SubsampleAssignment:
    """Per-dataset sorted index lists of a shared target size."""

    indices: dict  # dataset name -> tuple of sorted indices
    target_size: int
    seed: int

    def __post_init__(self):
        clean = {}
        for name, idx in self.indices.items():
            idx = tuple(idx)
            if len(idx) != self.target_size:
                raise DataError(f"{name}: {len(idx)} indices, target is {self.target_size}")
            if len(set(idx)) != len(idx):
                raise DataError(f"{name}: duplicate subsample indices")
            if any(i < 0 for i in idx):
                raise DataError(f"{name}: negative subsample index")
            if tuple(sorted(idx)) != idx:
                raise DataError(f"{name}: subsample indices must be sorted")
            clean[name] = idx
        object.__setattr__(self, "indices", clean)


def fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h ^= b
        h = (h * 0x100000001B3) & _MASK64
    return h


class SplitMix64:
    """64-bit SplitMix stream; fixed constants, part of the contract."""

    def __init__(self, state: int):
        self.state = state & _MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def sample_without_replacement(n: int, target: int, seed: int, name: str) -> tuple:
    """First ``target`` entries of a seeded partial Fisher-Yates shuffle
    of range(n), returned sorted ascending."""
    if target > n:
        raise DataError(f"{name}: cannot take {target} of {n} rows")
    gen = SplitMix64((seed & _MASK64) ^ fnv1a64(name))
    idx = list(range(n))
    for i in range(target):
        j = i + gen.next() % (n - i)
        idx[i], idx[j] = idx[j], idx[i]
    return tuple(sorted(idx[:target]))


def balanced_subsample(datasets, seed: int) -> SubsampleAssignment:
    """Uniform subsample of every dataset down to the smallest one's size.

    Each dataset's draw depends only on (seed, its own name, its own
    size), so the assignment is independent of dataset list order and the
    smallest dataset keeps all of its rows.
    """
    datasets = list(datasets)
    if not datasets:
        raise SpecError("balanced_subsample needs at least one dataset")
    sizes = {}
    for ds in datasets:
        size = ds.size if isinstance(ds, DatasetHandle) else int(ds[1])
        name = ds.name if isinstance(ds, DatasetHandle) else str(ds[0])
        if name in sizes:
            raise SpecError(f"duplicate dataset name {name!r}")
        if size < 1:
            raise DataError(f"dataset {name!r} is empty")
        sizes[name] = size
    target = min(sizes.values())
    indices = {
        name: sample_without_replacement(size, target, seed, name)
        for name, size in sizes.items()
    }
    return SubsampleAssignment(indices=indices, target_size=target, seed=seed)


def write_assignment(assignment: SubsampleAssignment, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dataset", "index"])
        for name in sorted(assignment.indices):
            for i in assignment.indices[name]:
                writer.writerow([name, i])


def read_assignment(path, seed: int = 0) -> SubsampleAssignment:
    per_dataset: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["dataset", "index"]:
            raise FormatError(f"{path}: expected header 'dataset,index', got {header}")
        for row in reader:
            if len(row) != 2:
                raise FormatError(f"{path}: bad row {row}")
            per_dataset.setdefault(row[0], []).append(int(row[1]))
    sizes = {len(v) for v in per_dataset.values()}
    if len(sizes) != 1:
        raise DataError(f"{path}: datasets have differing index counts {sorted(sizes)}")
    return SubsampleAssignment(
        indices={k: tuple(sorted(v)) for k, v in per_dataset.items()},
        target_size=sizes.pop(),
        seed=seed,
    )


@dataclass(frozen=True)
class BalanceReport:
    """Cells of the (group, class_label) grid whose count is off."""

    expected_per_cell: int
    mismatched: tuple  # ((group, class_label, count), ...)
    total: int
    unkeyed: int = 0

    @property
    def valid(self) -> bool:
        return not self.mismatched


def validate_balance(records, expected_per_cell: int) -> BalanceReport:
    """Count rows per (group tag, class label) cell over the cross product
    of observed groups and classes; report every cell that misses the
    expected count. Rows lacking a group or class label are tallied as
    unkeyed and belong to no cell."""
    counts: dict = {}
    groups = set()
    classes = set()
    unkeyed = 0
    total = 0
    for rec in records:
        total += 1
        if not rec.groups or rec.class_label is None:
            unkeyed += 1
            continue
        classes.add(rec.class_label)
        for g in rec.groups:
            groups.add(g)
            counts[(g, rec.class_label)] = counts.get((g, rec.class_label), 0) + 1
    mismatched = []
    for g in sorted(groups):
        for c in sorted(classes):
            count = counts.get((g, c), 0)
            if count != expected_per_cell:
                mismatched.append((g, c, count))
    return BalanceReport(
        expected_per_cell=expected_per_cell,
        mismatched=tuple(mismatched),
        total=total,
        unkeyed=unkeyed,
    )


def partition_by_group(records) -> dict:
    """Group tag -> sorted row indices; ALL always holds every row."""
    out: dict = {ALL_GROUP: list(range(len(records)))}
    for i, rec in enumerate(records):
        for g in rec.groups:
            out.setdefault(g, []).append(i)
    return {g: sorted(idx) for g, idx in out.items()}


def apply_exclusions(records, tags) -> list:
    """Indices of records whose class label and group tags avoid ``tags``.

    Generalizes per-dataset tag filters (e.g. dropping one object class
    that would confound a measurement)."""
    tags = set(tags)
    keep = []
    for i, rec in enumerate(records):
        if rec.class_label in tags:
            continue
        if tags.intersection(rec.groups):
            continue
        keep.append(i)
    return keep
