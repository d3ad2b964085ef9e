import numpy as np
import pytest
from hypothesis import given, strategies as st

from synthbench.dataset import (
    DataFormatError,
    LabeledDataset,
    PoolShortfallError,
    balance,
    clean,
    load_csv,
    sample_matched,
    save_csv,
    stratified_kfold,
)


def make_ds(rows, labels, names=None):
    rows = np.asarray(rows, dtype=np.uint8)
    names = names or tuple(f"f{i}" for i in range(rows.shape[1]))
    return LabeledDataset(rows, np.asarray(labels, dtype=np.uint8), names)


class TestLoadCsv:
    def test_basic_parse(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("f1,f2,y\n1,0,1\n0,0,0\n1,1,1\n")
        ds = load_csv(path, "y")
        assert ds.row_count == 3
        assert ds.feature_count == 2
        assert ds.labels.tolist() == [1, 0, 1]
        assert ds.feature_names == ("f1", "f2")
        assert ds.features.tolist() == [[1, 0], [0, 0], [1, 1]]

    def test_label_column_anywhere(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("y,f1,f2\n1,1,0\n0,0,1\n")
        ds = load_csv(path, "y")
        assert ds.feature_names == ("f1", "f2")
        assert ds.labels.tolist() == [1, 0]

    def test_non_binary_cell_names_row_and_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("f1,y\n1,1\n2,0\n")
        with pytest.raises(DataFormatError, match=r"line 3.*'f1'"):
            load_csv(path, "y")

    def test_empty_file(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("")
        with pytest.raises(DataFormatError, match="no rows"):
            load_csv(path, "y")

    def test_header_only(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("f1,y\n")
        with pytest.raises(DataFormatError, match="no rows"):
            load_csv(path, "y")

    def test_missing_label_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("f1,f2\n1,0\n")
        with pytest.raises(DataFormatError, match="no column named 'y'"):
            load_csv(path, "y")

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_csv(tmp_path / "absent.csv", "y")

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("f1,f2,y\n1,0,1\n1,0\n")
        with pytest.raises(DataFormatError, match="line 3"):
            load_csv(path, "y")

    def test_round_trip(self, tmp_path):
        ds = make_ds([[1, 0], [0, 1], [1, 1]], [1, 0, 1])
        path = tmp_path / "out.csv"
        save_csv(ds, path)
        back = load_csv(path, "label")
        assert np.array_equal(back.features, ds.features)
        assert np.array_equal(back.labels, ds.labels)
        assert back.feature_names == ds.feature_names


class TestDatasetValidation:
    def test_rejects_non_binary_features(self):
        with pytest.raises(DataFormatError):
            LabeledDataset(np.array([[2, 0]]), np.array([1]), ("a", "b"))

    def test_rejects_non_binary_labels(self):
        with pytest.raises(DataFormatError):
            LabeledDataset(np.array([[1, 0]]), np.array([3]), ("a", "b"))

    def test_rejects_duplicate_names(self):
        with pytest.raises(DataFormatError, match="duplicate"):
            LabeledDataset(np.array([[1, 0]]), np.array([1]), ("a", "a"))

    def test_rejects_empty(self):
        with pytest.raises(DataFormatError):
            LabeledDataset(np.empty((0, 2), dtype=np.uint8), np.empty(0), ("a", "b"))

    def test_immutable(self):
        ds = make_ds([[1, 0]], [1])
        with pytest.raises(ValueError):
            ds.features[0, 0] = 0


class TestClean:
    def test_removes_zero_rows_then_duplicates(self):
        ds = make_ds([[1, 0], [0, 0], [1, 0]], [1, 1, 1])
        out = clean(ds)
        assert out.features.tolist() == [[1, 0]]
        assert out.labels.tolist() == [1]

    def test_dedup_key_includes_label(self):
        ds = make_ds([[1, 0], [1, 0]], [1, 0])
        out = clean(ds)
        assert out.row_count == 2

    def test_all_zero_errors(self):
        ds = make_ds([[0, 0], [0, 0]], [1, 0])
        with pytest.raises(DataFormatError, match="all rows removed"):
            clean(ds)

    def test_keeps_first_occurrence_order(self):
        ds = make_ds([[1, 1], [1, 0], [1, 1], [0, 1]], [0, 1, 0, 1])
        out = clean(ds)
        assert out.features.tolist() == [[1, 1], [1, 0], [0, 1]]

    @given(st.integers(0, 2**32 - 1))
    def test_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        rows = (rng.random((20, 4)) < 0.4).astype(np.uint8)
        labels = (rng.random(20) < 0.5).astype(np.uint8)
        rows[0] = [1, 0, 0, 0]  # guarantee at least one surviving row
        once = clean(make_ds(rows, labels))
        twice = clean(once)
        assert np.array_equal(once.features, twice.features)
        assert np.array_equal(once.labels, twice.labels)


class TestStratifiedKfold:
    def test_small_class_lands_in_distinct_folds(self):
        # 8 pos + 2 neg over 5 folds: pos spread 1-2 per fold, neg in 2 folds
        ds = make_ds([[1, 0]] * 8 + [[0, 1]] * 2, [1] * 8 + [0] * 2)
        for seed in range(20):
            plan = stratified_kfold(ds, 5, seed)
            pos_folds = plan.assignments[ds.labels == 1]
            neg_folds = plan.assignments[ds.labels == 0]
            counts = np.bincount(pos_folds, minlength=5)
            assert counts.min() >= 1 and counts.max() <= 2
            assert len(set(neg_folds.tolist())) == 2

    def test_exact_divisibility(self):
        ds = make_ds([[1, 0]] * 4 + [[0, 1]] * 4, [1] * 4 + [0] * 4)
        plan = stratified_kfold(ds, 2, seed=3)
        for fold in (0, 1):
            test_labels = ds.labels[plan.test_indices(fold)]
            assert int((test_labels == 1).sum()) == 2
            assert int((test_labels == 0).sum()) == 2

    def test_deterministic(self):
        ds = make_ds([[1, 0]] * 30 + [[0, 1]] * 10, [1] * 30 + [0] * 10)
        a = stratified_kfold(ds, 5, seed=77)
        b = stratified_kfold(ds, 5, seed=77)
        assert np.array_equal(a.assignments, b.assignments)

    def test_k_too_large(self):
        ds = make_ds([[1, 0]] * 3, [1, 0, 1])
        with pytest.raises(ValueError, match="exceeds"):
            stratified_kfold(ds, 4, seed=0)

    def test_k_below_two(self):
        ds = make_ds([[1, 0]] * 3, [1, 0, 1])
        with pytest.raises(ValueError, match=">= 2"):
            stratified_kfold(ds, 1, seed=0)

    @given(
        st.integers(2, 6),
        st.integers(1, 40),
        st.integers(1, 40),
        st.integers(0, 2**63 - 1),
    )
    def test_fold_invariants(self, k, n_pos, n_neg, seed):
        n = n_pos + n_neg
        if n < k:
            return
        ds = make_ds([[1, 0]] * n_pos + [[0, 1]] * n_neg, [1] * n_pos + [0] * n_neg)
        plan = stratified_kfold(ds, k, seed)
        # union of folds is all rows, folds disjoint (each row one index)
        assert plan.assignments.shape == (n,)
        assert set(plan.assignments.tolist()) <= set(range(k))
        # no empty fold when N >= k
        assert len(set(plan.assignments.tolist())) == k
        # per-class counts within 1 of floor(count/k)
        for label, count in ((1, n_pos), (0, n_neg)):
            fold_counts = np.bincount(plan.assignments[ds.labels == label], minlength=k)
            assert fold_counts.max() - fold_counts.min() <= 1
            assert abs(int(fold_counts.max()) - count // k) <= 1


class TestSampleMatched:
    def pool_and_ref(self, n_pool_pos, n_pool_neg, n_ref_pos, n_ref_neg):
        pool = make_ds(
            [[1, 0, 0]] * n_pool_pos + [[0, 1, 0]] * n_pool_neg,
            [1] * n_pool_pos + [0] * n_pool_neg,
        )
        ref = make_ds(
            [[1, 1, 0]] * n_ref_pos + [[0, 0, 1]] * n_ref_neg,
            [1] * n_ref_pos + [0] * n_ref_neg,
        )
        return pool, ref

    def test_matches_class_counts(self):
        pool, ref = self.pool_and_ref(500, 500, 80, 20)
        out = sample_matched(pool, ref, seed=5)
        assert out.row_count == 100
        assert out.class_counts() == {0: 20, 1: 80}

    def test_shortfall_reported(self):
        pool, ref = self.pool_and_ref(100, 10, 30, 20)
        with pytest.raises(PoolShortfallError, match="shortfall 10") as exc:
            sample_matched(pool, ref, seed=5)
        assert exc.value.label == 0

    def test_deterministic(self):
        pool, ref = self.pool_and_ref(200, 100, 50, 30)
        a = sample_matched(pool, ref, seed=9)
        b = sample_matched(pool, ref, seed=9)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.labels, b.labels)

    def test_exhaustive_draw_reproduces_pool_order(self):
        # pool == requirement: output is the pool itself, any seed
        pool = make_ds([[1, 0], [0, 1], [1, 1], [1, 0]], [1, 0, 1, 0])
        for seed in (0, 1, 12345):
            out = sample_matched(pool, pool, seed)
            assert np.array_equal(out.features, pool.features)
            assert np.array_equal(out.labels, pool.labels)


class TestBalance:
    def imbalanced(self, n_pos=80, n_neg=20):
        return make_ds(
            [[1, 0]] * n_pos + [[0, 1]] * n_neg, [1] * n_pos + [0] * n_neg
        )

    def test_augment_with_ample_pool(self):
        ds = self.imbalanced()
        pool = make_ds([[1, 1]] * 100, [0] * 100)
        out = balance(ds, pool, "augment", seed=4)
        assert out.class_counts() == {0: 80, 1: 80}
        # 60 rows came from the pool
        assert int((out.features == [1, 1]).all(axis=1).sum()) == 60

    def test_augment_pool_exhausted_downsamples_majority(self):
        ds = self.imbalanced()
        pool = make_ds([[1, 1]] * 30, [0] * 30)
        out = balance(ds, pool, "augment", seed=4)
        assert out.class_counts() == {0: 50, 1: 50}
        assert int((out.features == [1, 1]).all(axis=1).sum()) == 30

    def test_downsample(self):
        out = balance(self.imbalanced(), None, "downsample", seed=4)
        assert out.class_counts() == {0: 20, 1: 20}

    def test_upsample(self):
        out = balance(self.imbalanced(), None, "upsample", seed=4)
        assert out.class_counts() == {0: 80, 1: 80}

    def test_augment_requires_pool(self):
        with pytest.raises(ValueError, match="pool"):
            balance(self.imbalanced(), None, "augment", seed=0)

    def test_single_class_rejected(self):
        ds = make_ds([[1, 0]] * 5, [1] * 5)
        with pytest.raises(ValueError, match="both classes"):
            balance(ds, None, "upsample", seed=0)

    def test_unknown_mode(self):
        with pytest.raises(ValueError, match="unknown balance mode"):
            balance(self.imbalanced(), None, "smote", seed=0)

    @given(
        st.integers(1, 12),
        st.integers(1, 12),
        st.integers(0, 12),
        st.sampled_from(["upsample", "downsample", "augment"]),
        st.integers(0, 2**32 - 1),
    )
    def test_always_exactly_balanced(self, n_pos, n_neg, n_pool, mode, seed):
        ds = make_ds(
            [[1, 0]] * n_pos + [[0, 1]] * n_neg, [1] * n_pos + [0] * n_neg
        )
        minority = 0 if n_neg <= n_pos else 1
        pool = None
        if mode == "augment":
            if n_pool == 0:
                return
            pool = make_ds([[1, 1]] * n_pool, [minority] * n_pool)
        out = balance(ds, pool, mode, seed)
        counts = out.class_counts()
        assert counts[0] == counts[1] > 0

    def test_deterministic(self):
        ds = self.imbalanced()
        pool = make_ds([[1, 1]] * 100, [0] * 100)
        a = balance(ds, pool, "augment", seed=11)
        b = balance(ds, pool, "augment", seed=11)
        assert np.array_equal(a.features, b.features)
