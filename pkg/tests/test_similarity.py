import numpy as np
import pytest
from hypothesis import given, strategies as st

from synthbench.bitops import hamming_cdist, pack_rows, row_keys
from synthbench.similarity import (
    coverage,
    density,
    knn_radii,
    precision,
    recall,
    similarity_report,
)

from .oracles import hamming, knn_radii_naive, prdc_naive


def bits(rows):
    return np.asarray(rows, dtype=np.uint8)


def random_sets(seed, max_n=64, max_d=16):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, max_d + 1))
    n_x = int(rng.integers(7, max_n + 1))
    n_y = int(rng.integers(7, max_n + 1))
    p = rng.uniform(0.2, 0.8)
    x = (rng.random((n_x, d)) < p).astype(np.uint8)
    y = (rng.random((n_y, d)) < p).astype(np.uint8)
    return x, y


class TestBitops:
    @given(st.integers(0, 10_000))
    def test_hamming_matches_naive(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(1, 130))
        a = (rng.random((5, d)) < 0.5).astype(np.uint8)
        b = (rng.random((4, d)) < 0.5).astype(np.uint8)
        dists = hamming_cdist(a, b)
        for i in range(5):
            for j in range(4):
                assert dists[i, j] == hamming(a[i], b[j])

    def test_packed_keys_equal_iff_rows_equal(self):
        rows = bits([[1, 0, 1], [1, 0, 1], [0, 0, 1]])
        keys = row_keys(rows)
        assert keys[0] == keys[1]
        assert keys[0] != keys[2]

    def test_pack_width(self):
        rows = bits(np.ones((3, 70)))
        assert pack_rows(rows).shape == (3, 2)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            hamming_cdist(bits([[1, 0]]), bits([[1, 0, 1]]))

    def test_euclidean_order_equals_hamming_order(self):
        # squared Euclidean == Hamming on bits, so neighbour order matches
        rng = np.random.default_rng(7)
        a = (rng.random((20, 12)) < 0.5).astype(np.uint8)
        ham = hamming_cdist(a, a)
        diff = a[:, None, :].astype(np.int64) - a[None, :, :].astype(np.int64)
        sq_euclid = (diff * diff).sum(axis=2)
        assert np.array_equal(ham, sq_euclid)


class TestKnnRadii:
    def test_worked_example(self):
        s = bits([[0, 0], [0, 1], [1, 1]])
        assert knn_radii(s, 1).radii.tolist() == [1, 1, 1]

    def test_duplicate_rows_zero_radius(self):
        s = bits([[1, 0], [1, 0]])
        assert knn_radii(s, 1).radii.tolist() == [0, 0]

    def test_too_few_rows(self):
        s = bits([[1, 0], [0, 1]])
        with pytest.raises(ValueError, match="at least k\\+1"):
            knn_radii(s, 2)

    @given(st.integers(0, 500))
    def test_matches_naive(self, seed):
        rng = np.random.default_rng(seed)
        n, d = int(rng.integers(4, 20)), int(rng.integers(2, 10))
        s = (rng.random((n, d)) < 0.5).astype(np.uint8)
        k = int(rng.integers(1, n))
        assert knn_radii(s, k).radii.tolist() == knn_radii_naive(s, k)


class TestWorkedMetrics:
    X = bits([[0, 0], [1, 1]])
    Y = bits([[0, 0], [0, 1]])

    def test_precision(self):
        assert precision(self.X, self.Y, 1) == 1.0

    def test_recall(self):
        assert recall(self.X, self.Y, 1) == 1.0

    def test_density(self):
        assert density(self.X, self.Y, 1) == 2.0

    def test_coverage(self):
        assert coverage(self.X, self.Y, 1) == 1.0

    def test_density_single_membership(self):
        x = bits([[0, 0, 0, 0], [1, 1, 1, 1], [1, 1, 1, 0]])  # radii 1,1,1 for k=1
        y = bits([[0, 0, 0, 1]])  # inside ball of 0000 only
        assert density(x, y, 1) == 1.0

    def test_identical_sets(self):
        x = bits([[0, 0, 1], [0, 1, 0], [1, 0, 0], [1, 1, 1]])
        report = similarity_report(x, x, 1)
        assert report.precision == 1.0
        assert report.recall == 1.0
        assert report.coverage == 1.0
        assert report.sum == pytest.approx(
            report.precision + report.recall + report.density + report.coverage
        )

    def test_far_disjoint_sets_zero(self):
        x = np.zeros((6, 16), dtype=np.uint8)
        x[np.arange(6), np.arange(6)] = 1  # tight cluster near zero, radii 2
        y = np.ones((6, 16), dtype=np.uint8)
        y[np.arange(6), np.arange(6)] = 0
        assert precision(x, y, 1) == 0.0
        assert recall(x, y, 1) == 0.0
        assert density(x, y, 1) == 0.0
        assert coverage(x, y, 1) == 0.0

    def test_precondition_propagates(self):
        x = bits([[0, 0], [1, 1]])
        with pytest.raises(ValueError):
            similarity_report(x, x, 2)


class TestOracleEquivalence:
    @given(st.integers(0, 400))
    def test_exact_match_random_instances(self, seed):
        x, y = random_sets(seed)
        k = [1, 3, 5][seed % 3]
        report = similarity_report(x, y, k)
        p, r, d, c = prdc_naive(x, y, k)
        assert report.precision == p
        assert report.recall == r
        assert report.density == d
        assert report.coverage == c

    @given(st.integers(0, 200))
    def test_precision_recall_symmetry(self, seed):
        x, y = random_sets(seed, max_n=32)
        k = 1 + seed % 4
        assert precision(x, y, k) == recall(y, x, k)

    @given(st.integers(0, 100))
    def test_row_permutation_invariance(self, seed):
        x, y = random_sets(seed, max_n=24)
        rng = np.random.default_rng(seed + 1)
        xp = x[rng.permutation(x.shape[0])]
        yp = y[rng.permutation(y.shape[0])]
        a = similarity_report(x, y, 2)
        b = similarity_report(xp, yp, 2)
        assert (a.precision, a.recall, a.density, a.coverage) == (
            b.precision, b.recall, b.density, b.coverage
        )

    @given(st.integers(0, 100))
    def test_enlarged_radii_monotone(self, seed):
        # growing every ball by +1 never decreases precision/density/coverage
        x, y = random_sets(seed, max_n=24)
        k = 2
        from synthbench.bitops import hamming_cdist as cdist
        from synthbench.similarity import knn_radii as kr

        radii = kr(x, k).radii
        dists = cdist(x, y)
        for grow in (0, 1):
            inside = dists <= (radii + grow)[:, None]
            if grow == 0:
                base = (
                    inside.any(axis=0).mean(),
                    inside.sum() / (k * y.shape[0]),
                    inside.any(axis=1).mean(),
                )
            else:
                grown = (
                    inside.any(axis=0).mean(),
                    inside.sum() / (k * y.shape[0]),
                    inside.any(axis=1).mean(),
                )
        assert grown[0] >= base[0]
        assert grown[1] >= base[1]
        assert grown[2] >= base[2]

    @given(st.integers(0, 100))
    def test_documented_bounds(self, seed):
        x, y = random_sets(seed, max_n=24)
        report = similarity_report(x, y, 3)
        assert 0.0 <= report.precision <= 1.0
        assert 0.0 <= report.recall <= 1.0
        assert 0.0 <= report.coverage <= 1.0
        assert report.density >= 0.0

    def test_duplicated_training_row_zero_radius(self):
        # duplicate rows in X give radius 0; only exact copies fall inside
        x = bits([[1, 0, 1], [1, 0, 1], [0, 1, 0], [0, 1, 0]])
        y_copy = bits([[1, 0, 1]])
        y_near = bits([[1, 0, 0]])
        assert precision(x, y_copy, 1) == 1.0
        assert precision(x, y_near, 1) == 0.0


class TestReportShape:
    def test_json_fields(self):
        x, y = random_sets(3)
        report = similarity_report(x, y, 3)
        payload = report.to_dict()
        assert set(payload) == {
            "precision", "recall", "density", "coverage", "sum",
            "k", "n_real", "n_synth",
        }
        assert payload["n_real"] == x.shape[0]
        assert payload["n_synth"] == y.shape[0]
