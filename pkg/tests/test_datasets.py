import numpy as np
import pytest

from imeval.data_model import ALL_GROUP, SampleRecord
from imeval.datasets import (
    BalanceReport,
    DatasetHandle,
    SplitMix64,
    SubsampleAssignment,
    apply_exclusions,
    balanced_subsample,
    fnv1a64,
    partition_by_group,
    read_assignment,
    sample_without_replacement,
    validate_balance,
    write_assignment,
)
from imeval.errors import DataError, FormatError, SpecError


class TestHashPrimitives:
    def test_fnv1a64_reference_vectors(self):
        # published FNV-1a 64-bit test vectors
        assert fnv1a64("") == 0xCBF29CE484222325
        assert fnv1a64("a") == 0xAF63DC4C8601EC8C
        assert fnv1a64("foobar") == 0x85944171F73967E8

    def test_splitmix64_reference_vectors(self):
        # first three outputs for state 0, per the reference implementation
        gen = SplitMix64(0)
        assert gen.next() == 0xE220A8397B1DCDAF
        assert gen.next() == 0x6E789E6AA1B965F4
        assert gen.next() == 0x06C45D188009454F

    def test_splitmix64_wraps_state(self):
        assert SplitMix64(2**64 + 5).state == 5


class TestSampleWithoutReplacement:
    def test_sorted_unique_in_range(self):
        idx = sample_without_replacement(1000, 100, seed=3, name="x")
        assert len(idx) == 100
        assert len(set(idx)) == 100
        assert all(0 <= i < 1000 for i in idx)
        assert list(idx) == sorted(idx)

    def test_deterministic(self):
        a = sample_without_replacement(500, 50, seed=9, name="coco")
        b = sample_without_replacement(500, 50, seed=9, name="coco")
        assert a == b

    def test_seed_and_name_both_matter(self):
        base = sample_without_replacement(500, 50, seed=9, name="coco")
        assert sample_without_replacement(500, 50, seed=10, name="coco") != base
        assert sample_without_replacement(500, 50, seed=9, name="parti") != base

    def test_full_take_is_identity(self):
        assert sample_without_replacement(7, 7, seed=1, name="d") == tuple(range(7))

    def test_overdraw_refused(self):
        with pytest.raises(DataError):
            sample_without_replacement(5, 6, seed=0, name="d")

    def test_uniformity_rough(self):
        # every index should be picked roughly target/n of the time
        hits = np.zeros(20)
        for seed in range(400):
            for i in sample_without_replacement(20, 5, seed=seed, name="u"):
                hits[i] += 1
        assert hits.min() > 400 * 0.25 * 0.5
        assert hits.max() < 400 * 0.25 * 1.5


class TestBalancedSubsample:
    def test_target_is_smallest_size(self):
        out = balanced_subsample([("a", 120), ("b", 80), ("c", 95)], seed=0)
        assert out.target_size == 80
        assert set(out.indices) == {"a", "b", "c"}
        assert out.indices["b"] == tuple(range(80))

    def test_list_order_does_not_matter(self):
        fwd = balanced_subsample([("a", 120), ("b", 80), ("c", 95)], seed=4)
        rev = balanced_subsample([("c", 95), ("b", 80), ("a", 120)], seed=4)
        assert fwd.indices == rev.indices

    def test_handles_work_like_pairs(self):
        records = tuple(SampleRecord(i) for i in range(30))
        handle = DatasetHandle("h", records)
        out = balanced_subsample([handle, ("other", 50)], seed=2)
        assert out.target_size == 30
        assert out.indices["h"] == tuple(range(30))
        assert len(out.indices["other"]) == 30

    def test_duplicate_name_refused(self):
        with pytest.raises(SpecError):
            balanced_subsample([("a", 10), ("a", 12)], seed=0)

    def test_empty_inputs_refused(self):
        with pytest.raises(SpecError):
            balanced_subsample([], seed=0)
        with pytest.raises(DataError):
            balanced_subsample([("a", 0)], seed=0)

    def test_assignment_validates_shape(self):
        with pytest.raises(DataError):
            SubsampleAssignment(indices={"a": (0, 1, 1)}, target_size=3, seed=0)
        with pytest.raises(DataError):
            SubsampleAssignment(indices={"a": (1, 0)}, target_size=2, seed=0)

    def test_round_trip_through_csv(self, tmp_path):
        out = balanced_subsample([("a", 40), ("b", 25)], seed=7)
        path = tmp_path / "s.csv"
        write_assignment(out, path)
        loaded = read_assignment(path, seed=7)
        assert loaded.indices == out.indices
        assert loaded.target_size == out.target_size

    def test_read_rejects_bad_header(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("ds,idx\na,0\n")
        with pytest.raises(FormatError):
            read_assignment(path)

    def test_read_rejects_ragged_counts(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("dataset,index\na,0\na,1\nb,0\n")
        with pytest.raises(DataError):
            read_assignment(path)


def _grid_records(groups, classes, per_cell, start=0):
    records = []
    i = start
    for g in groups:
        for c in classes:
            for _ in range(per_cell):
                records.append(SampleRecord(i, class_label=c, groups=(g,)))
                i += 1
    return records


class TestValidateBalance:
    def test_balanced_grid_accepted(self):
        records = _grid_records(("r1", "r2", "r3"), ("c1", "c2"), per_cell=4)
        report = validate_balance(records, expected_per_cell=4)
        assert report.valid
        assert report.total == 24
        assert report.unkeyed == 0

    def test_missing_row_names_the_cell(self):
        records = _grid_records(("r1", "r2"), ("c1", "c2"), per_cell=3)
        report = validate_balance(records[:-1], expected_per_cell=3)
        assert not report.valid
        assert report.mismatched == (("r2", "c2", 2),)

    def test_moved_row_flags_both_cells(self):
        records = _grid_records(("r1", "r2"), ("c1",), per_cell=3)
        records[0] = SampleRecord(0, class_label="c1", groups=("r2",))
        report = validate_balance(records, expected_per_cell=3)
        assert set(report.mismatched) == {("r1", "c1", 2), ("r2", "c1", 4)}

    def test_unkeyed_rows_belong_to_no_cell(self):
        records = _grid_records(("r1",), ("c1",), per_cell=2)
        records.append(SampleRecord(9, class_label=None, groups=("r1",)))
        records.append(SampleRecord(10, class_label="c1", groups=()))
        report = validate_balance(records, expected_per_cell=2)
        assert report.valid
        assert report.unkeyed == 2
        assert report.total == 4

    def test_absent_cell_reported_as_zero(self):
        records = _grid_records(("r1",), ("c1",), 2) + _grid_records(("r2",), ("c2",), 2, start=10)
        report = validate_balance(records, expected_per_cell=2)
        assert ("r1", "c2", 0) in report.mismatched
        assert ("r2", "c1", 0) in report.mismatched


class TestPartitions:
    def test_partition_by_group(self):
        records = [
            SampleRecord(0, groups=("a",)),
            SampleRecord(1, groups=("b", "a")),
            SampleRecord(2, groups=()),
        ]
        parts = partition_by_group(records)
        assert parts[ALL_GROUP] == [0, 1, 2]
        assert parts["a"] == [0, 1]
        assert parts["b"] == [1]

    def test_apply_exclusions(self):
        records = [
            SampleRecord(0, class_label="cat", groups=("x",)),
            SampleRecord(1, class_label="dog", groups=("y",)),
            SampleRecord(2, class_label="cat", groups=("y",)),
        ]
        assert apply_exclusions(records, {"cat"}) == [1]
        assert apply_exclusions(records, {"y"}) == [0]
        assert apply_exclusions(records, set()) == [0, 1, 2]
