import numpy as np
import pytest

from sctag.correction import TagVocabulary
from sctag.ingest import TaggedDocument
from sctag.stratify import (
    LabelMatrix,
    build_label_matrix,
    iterative_stratify,
    labelset_stratify,
    random_stratify,
    read_partition,
    strat_report,
    two_stage_split,
    write_partition,
)
from sctag.synth import longtail_label_rows


def doc(pid, tags):
    return TaggedDocument(pid, "irrelevant text here", set(tags), 0, 1)


class TestLabelMatrix:
    def test_entries_reflect_tags(self):
        vocab = TagVocabulary(["a", "b"])
        Y = build_label_matrix([doc(10, {"a"}), doc(11, {"a", "b"})], vocab)
        assert Y.m == 2 and Y.q == 2
        assert Y.rows == [(0,), (0, 1)]
        assert Y.sample_ids == [10, 11]

    def test_single_doc(self):
        vocab = TagVocabulary(["a", "b", "c"])
        Y = build_label_matrix([doc(1, {"b"})], vocab)
        assert Y.rows == [(1,)]

    def test_unknown_tag_errors(self):
        vocab = TagVocabulary(["a"])
        with pytest.raises(ValueError, match="mystery"):
            build_label_matrix([doc(1, {"mystery"})], vocab)


class TestIterativeStratify:
    def test_two_label_perfect_split(self):
        # derived: the only zero-deviation equal split puts one A and one B
        # sample in each half
        Y = LabelMatrix.from_rows([(0,), (0,), (1,), (1,)], q=2)
        for seed in range(5):
            part = iterative_stratify(Y, (0.5, 0.5), seed=seed)
            for s in (0, 1):
                rows = [Y.rows[i] for i in part.subset_indices(s)]
                assert sorted(rows) == [(0,), (1,)]

    def test_single_label_reduces_to_size_stratification(self):
        Y = LabelMatrix.from_rows([(0,)] * 10, q=1)
        part = iterative_stratify(Y, (0.9, 0.1), seed=3)
        assert part.sizes() == [9, 1]

    def test_single_sample_lands_in_largest_subset(self):
        Y = LabelMatrix.from_rows([(0,)], q=1)
        part = iterative_stratify(Y, (0.2, 0.7, 0.1), seed=0)
        assert part.assignment[0] == 1

    def test_deterministic(self):
        rows = longtail_label_rows(200, 10, rarest=5, seed=1)
        Y = LabelMatrix.from_rows(rows, q=10)
        a = iterative_stratify(Y, (0.8, 0.1, 0.1), seed=42)
        b = iterative_stratify(Y, (0.8, 0.1, 0.1), seed=42)
        assert np.array_equal(a.assignment, b.assignment)

    def test_partition_total_and_disjoint(self):
        rows = longtail_label_rows(300, 12, rarest=6, seed=2)
        Y = LabelMatrix.from_rows(rows, q=12)
        part = iterative_stratify(Y, (0.6, 0.2, 0.2), seed=0)
        assert (part.assignment >= 0).all() and (part.assignment <= 2).all()
        assert sum(part.sizes()) == Y.m

    def test_bad_ratios(self):
        Y = LabelMatrix.from_rows([(0,)], q=1)
        with pytest.raises(ValueError):
            iterative_stratify(Y, (0.5, 0.4), seed=0)


class TestTwoStageSplit:
    def test_sizes_10000(self):
        rows = longtail_label_rows(10000, 8, rarest=120, seed=0)
        Y = LabelMatrix.from_rows(rows, q=8)
        part = two_stage_split(Y, seed=0)
        sizes = part.sizes()
        assert abs(sizes[0] - 9801) <= 1
        assert abs(sizes[1] - 99) <= 1
        assert abs(sizes[2] - 100) <= 1

    def test_single_label_100(self):
        Y = LabelMatrix.from_rows([(0,)] * 100, q=1)
        part = two_stage_split(Y, seed=0)
        assert part.sizes() == [98, 1, 1]

    def test_seed_reproducible(self):
        rows = longtail_label_rows(500, 5, rarest=20, seed=3)
        Y = LabelMatrix.from_rows(rows, q=5)
        a = two_stage_split(Y, seed=9)
        b = two_stage_split(Y, seed=9)
        assert np.array_equal(a.assignment, b.assignment)


class TestLabelsetStratify:
    def test_two_labelsets_even_split(self):
        rows = [(0,)] * 10 + [(0, 1)] * 10
        Y = LabelMatrix.from_rows(rows, q=2)
        part = labelset_stratify(Y, (0.5, 0.5), seed=0)
        for s in (0, 1):
            subset_rows = [Y.rows[i] for i in part.subset_indices(s)]
            assert subset_rows.count((0,)) == 5
            assert subset_rows.count((0, 1)) == 5

    def test_all_unique_labelsets_degenerates_to_sized_split(self):
        rows = [(j,) for j in range(10)]
        Y = LabelMatrix.from_rows(rows, q=10)
        part = labelset_stratify(Y, (0.8, 0.2), seed=1)
        assert part.sizes() == [8, 2]

    def test_deterministic(self):
        rows = longtail_label_rows(100, 6, rarest=4, seed=0)
        Y = LabelMatrix.from_rows(rows, q=6)
        a = labelset_stratify(Y, (0.7, 0.3), seed=5)
        b = labelset_stratify(Y, (0.7, 0.3), seed=5)
        assert np.array_equal(a.assignment, b.assignment)


class TestStratReport:
    def test_perfect_split_zero_deviation(self):
        Y = LabelMatrix.from_rows([(0,), (0,), (1,), (1,)], q=2)
        part = iterative_stratify(Y, (0.5, 0.5), seed=0)
        report = strat_report(Y, part)
        assert report.max_deviation == pytest.approx(0.0)

    def test_concentrated_label_deviation(self):
        # all positives of the label in subset 0: empty-subset deviation is c_j
        Y = LabelMatrix.from_rows([(0,), (0,), (1,), (1,)], q=2)
        part = iterative_stratify(Y, (0.5, 0.5), seed=0)
        part.assignment[:] = [0, 0, 1, 1]
        report = strat_report(Y, part)
        c0 = 0.5
        assert report.proportions[1, 0] == 0.0
        assert abs(report.proportions[1, 0] - c0) == pytest.approx(c0)

    def test_deviations_nonnegative(self):
        rows = longtail_label_rows(200, 10, rarest=5, seed=7)
        Y = LabelMatrix.from_rows(rows, q=10)
        report = strat_report(Y, iterative_stratify(Y, (0.8, 0.1, 0.1), seed=0))
        assert report.max_deviation >= 0 and report.mean_deviation >= 0


def test_rare_label_floor():
    # every subset receives >= 1 positive of every label at desk scale
    rows = longtail_label_rows(1000, 20, rarest=20, seed=0)
    Y = LabelMatrix.from_rows(rows, q=20)
    part = iterative_stratify(Y, (0.8, 0.1, 0.1), seed=0)
    for s in range(3):
        sub = [Y.rows[i] for i in part.subset_indices(s)]
        present = {j for r in sub for j in r}
        assert present == set(range(20))


def test_iterative_beats_random_on_mean_deviation():
    rows = longtail_label_rows(400, 15, rarest=10, seed=4)
    Y = LabelMatrix.from_rows(rows, q=15)
    wins = 0
    for seed in range(10):
        it = strat_report(Y, iterative_stratify(Y, (0.8, 0.1, 0.1), seed=seed))
        rnd = strat_report(Y, random_stratify(Y, (0.8, 0.1, 0.1), seed=seed))
        wins += it.mean_deviation < rnd.mean_deviation
    assert wins >= 8


def test_partition_file_roundtrip(tmp_path):
    Y = LabelMatrix.from_rows([(0,), (1,)], q=2, sample_ids=[5, 9])
    part = iterative_stratify(Y, (0.5, 0.5), seed=0)
    path = tmp_path / "partition.tsv"
    write_partition(Y, part, str(path))
    back = read_partition(str(path))
    assert set(back) == {5, 9}
    assert set(back.values()) <= {"train", "val", "test"}
