import numpy as np
import pytest
from hypothesis import given, strategies as st

from synthbench.classifiers import (
    ScoreReport,
    TrainedClassifier,
    auc_roc,
    logreg_loss_and_gradient,
    predict_scores,
    score_report,
    train,
)
from synthbench.dataset import LabeledDataset

from .oracles import GiniTree, auc_pairwise, central_difference_grads


def make_ds(rows, labels):
    rows = np.asarray(rows, dtype=np.uint8)
    names = tuple(f"f{i}" for i in range(rows.shape[1]))
    return LabeledDataset(rows, np.asarray(labels, dtype=np.uint8), names)


NB_DS = make_ds([[1, 0], [1, 1], [0, 0], [0, 1]], [1, 1, 0, 0])


class TestNaiveBayes:
    def test_laplace_smoothed_likelihood(self):
        model = train("nbayes", NB_DS)
        # P(f1=1 | y=1) = (2+1)/(2+2)
        assert np.exp(model.log_p[1][0]) == pytest.approx(0.75, abs=1e-12)

    def test_hand_computed_posterior(self):
        model = train("nbayes", NB_DS)
        # row (1,0): l1 = 0.5*0.75*0.5, l0 = 0.5*0.25*0.5 -> posterior 0.75
        score = predict_scores(model, [[1, 0]])[0]
        assert score == pytest.approx(0.75, abs=1e-9)

    def test_single_class_degenerate(self):
        ds = make_ds([[1, 0], [0, 1]], [1, 1])
        model = train("nbayes", ds)
        assert predict_scores(model, [[1, 0]])[0] == 1.0


class TestKnn:
    def test_self_neighbour_k1(self):
        ds = make_ds([[1, 0], [0, 1], [1, 1]], [1, 0, 1])
        model = train("knn", ds, {"k": 1})
        scores = predict_scores(model, ds.features)
        assert scores.tolist() == [1.0, 0.0, 1.0]

    def test_equidistant_count_rule(self):
        ds = make_ds(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [1, 1, 1, 1]],
            [1, 1, 0, 0],
        )
        model = train("knn", ds, {"k": 3})
        # query at distance 1 from the first three rows, 4 from the last
        assert predict_scores(model, [[0, 0, 0, 0]])[0] == pytest.approx(2 / 3)

    def test_one_class_tolerated(self):
        ds = make_ds([[1, 0], [0, 1]], [0, 0])
        model = train("knn", ds, {"k": 2})
        assert predict_scores(model, [[1, 1]])[0] == 0.0


class TestLogreg:
    def test_separable_reaches_full_accuracy(self):
        rng = np.random.default_rng(0)
        rows = (rng.random((40, 4)) < 0.5).astype(np.uint8)
        labels = rows[:, 0]  # y == f0: linearly separable
        ds = make_ds(rows, labels)
        model = train("logreg", ds, seed=1)
        pred = predict_scores(model, ds.features) >= 0.5
        assert (pred == labels).mean() == 1.0

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        x = (rng.random((12, 5)) < 0.5).astype(np.float64)
        y = (rng.random(12) < 0.5).astype(np.float64)
        w = rng.standard_normal(5)
        b = np.array([rng.standard_normal()])
        _, gw, gb = logreg_loss_and_gradient(w, b[0], x, y)

        fd = central_difference_grads(
            lambda: logreg_loss_and_gradient(w, b[0], x, y)[0], [w, b], eps=1e-6
        )
        assert np.allclose(gw, fd[0], rtol=1e-4, atol=1e-8)
        assert np.isclose(gb, fd[1][0], rtol=1e-4, atol=1e-8)

    def test_requires_both_classes(self):
        ds = make_ds([[1, 0], [0, 1]], [1, 1])
        with pytest.raises(ValueError, match="both classes"):
            train("logreg", ds)


class TestRandomForest:
    def test_degenerates_to_reference_tree(self):
        rng = np.random.default_rng(5)
        rows = (rng.random((32, 6)) < 0.5).astype(np.uint8)
        labels = ((rows[:, 0] & rows[:, 1]) | rows[:, 2]).astype(np.uint8)
        if labels.all() or not labels.any():
            labels[0] ^= 1
        ds = make_ds(rows, labels)
        model = train(
            "rforest", ds,
            {"n_trees": 1, "max_features": 6, "bootstrap": False, "max_depth": 6},
        )
        oracle = GiniTree(rows, labels, max_depth=6)
        queries = (rng.random((40, 6)) < 0.5).astype(np.uint8)
        got = predict_scores(model, queries)
        expected = [oracle.score(q) for q in queries]
        assert np.allclose(got, expected, atol=0)

    def test_scores_in_unit_interval(self):
        rng = np.random.default_rng(6)
        rows = (rng.random((40, 5)) < 0.5).astype(np.uint8)
        labels = (rng.random(40) < 0.5).astype(np.uint8)
        ds = make_ds(rows, labels)
        model = train("rforest", ds, {"n_trees": 10}, seed=4)
        scores = predict_scores(model, rows)
        assert ((scores >= 0) & (scores <= 1)).all()


class TestSvm:
    def test_separable_margin_sign(self):
        rng = np.random.default_rng(1)
        rows = (rng.random((40, 4)) < 0.5).astype(np.uint8)
        labels = rows[:, 1]
        ds = make_ds(rows, labels)
        model = train("svm", ds, seed=2)
        margins = predict_scores(model, ds.features)
        assert ((margins > 0) == labels.astype(bool)).mean() == 1.0

    def test_proba_is_sigmoid_of_margin(self):
        ds = make_ds([[1, 0], [0, 1], [1, 1], [0, 0]], [1, 0, 1, 0])
        model = train("svm", ds, seed=3)
        margins = model.predict_scores(ds.features)
        proba = model.predict_proba(ds.features)
        assert np.allclose(proba, 1 / (1 + np.exp(-margins)))


class TestDeterminismAndValidation:
    @pytest.mark.parametrize("kind", ["logreg", "nbayes", "knn", "rforest", "svm", "mlp"])
    def test_bit_identical_repeat(self, kind):
        rng = np.random.default_rng(9)
        rows = (rng.random((30, 6)) < 0.5).astype(np.uint8)
        labels = (rng.random(30) < 0.4).astype(np.uint8)
        if labels.all() or not labels.any():
            labels[0] ^= 1
        ds = make_ds(rows, labels)
        queries = (rng.random((10, 6)) < 0.5).astype(np.uint8)
        config = {"epochs": 10} if kind in ("logreg", "svm", "mlp") else None
        a = predict_scores(train(kind, ds, config, seed=42), queries)
        b = predict_scores(train(kind, ds, config, seed=42), queries)
        assert np.array_equal(a, b)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown classifier kind"):
            train("xgboost", NB_DS)

    def test_invalid_hyperparameter(self):
        with pytest.raises(ValueError, match="invalid"):
            train("knn", NB_DS, {"neighbours": 5})

    def test_dimension_mismatch(self):
        model = train("nbayes", NB_DS)
        with pytest.raises(ValueError, match="expected"):
            predict_scores(model, [[1, 0, 1]])

    def test_empty_rows_empty_scores(self):
        model = train("nbayes", NB_DS)
        assert predict_scores(model, []).shape == (0,)


class TestAucRoc:
    def test_perfect_separation(self):
        assert auc_roc([0.9, 0.8, 0.3, 0.2], [1, 1, 0, 0]) == 1.0

    def test_worked_tie_example(self):
        # pairs: (.8,.8) tie, (.8,.1) win, (.2,.8) loss, (.2,.1) win -> 2.5/4
        assert auc_roc([0.8, 0.2, 0.8, 0.1], [1, 1, 0, 0]) == 0.625

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="positive and one negative"):
            auc_roc([0.5, 0.6], [1, 1])

    @given(st.integers(0, 500))
    def test_matches_pairwise_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 201))
        # coarse grid of score values forces plenty of ties
        scores = rng.choice(np.linspace(0, 1, 7), size=n)
        labels = (rng.random(n) < 0.5).astype(int)
        if labels.all():
            labels[0] = 0
        if not labels.any():
            labels[0] = 1
        got = auc_roc(scores, labels)
        expected = auc_pairwise(scores, labels)
        assert got == pytest.approx(float(expected), abs=1e-12)

    @given(st.integers(0, 200))
    def test_monotone_transform_invariance(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 80))
        scores = rng.choice(np.linspace(0, 1, 9), size=n)
        labels = (rng.random(n) < 0.5).astype(int)
        if labels.all():
            labels[0] = 0
        if not labels.any():
            labels[0] = 1
        # random strictly increasing piecewise-linear map
        knots_x = np.linspace(-0.1, 1.1, 6)
        knots_y = np.cumsum(rng.uniform(0.1, 2.0, 6))
        mapped = np.interp(scores, knots_x, knots_y)
        assert auc_roc(mapped, labels) == auc_roc(scores, labels)

    @given(st.integers(0, 200))
    def test_label_flip_complement(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 60))
        scores = rng.permutation(n).astype(np.float64)  # tie-free
        labels = (rng.random(n) < 0.5).astype(int)
        if labels.all():
            labels[0] = 0
        if not labels.any():
            labels[0] = 1
        assert auc_roc(scores, labels) + auc_roc(scores, 1 - labels) == pytest.approx(
            1.0, abs=1e-12
        )


class _FixedScores(TrainedClassifier):
    """Test stub returning pre-set scores/probabilities."""

    def __init__(self, scores, n_features):
        super().__init__("fixed", n_features)
        self.scores = np.asarray(scores, dtype=np.float64)

    def predict_scores(self, rows):
        return self.scores


class TestScoreReport:
    def test_perfect_classifier(self):
        ds = make_ds([[1, 0]] * 5 + [[0, 1]] * 5, [1] * 5 + [0] * 5)
        model = _FixedScores([0.9] * 5 + [0.1] * 5, 2)
        report = score_report(model, ds)
        assert report.auc_roc == 1.0
        assert report.accuracy == 1.0
        assert report.recall0 == 1.0
        assert report.recall1 == 1.0

    def test_constant_scores_give_half_auc(self):
        ds = make_ds([[1, 0]] * 4 + [[0, 1]] * 6, [1] * 4 + [0] * 6)
        model = _FixedScores([0.3] * 10, 2)
        assert score_report(model, ds).auc_roc == 0.5

    def test_hand_confusion_matrix(self):
        # TP=3 FP=1 TN=4 FN=2
        labels = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0]
        scores = [0.9, 0.8, 0.7, 0.2, 0.1, 0.6, 0.3, 0.2, 0.1, 0.05]
        ds = make_ds([[1, 0]] * 10, np.array(labels))
        report = score_report(_FixedScores(scores, 2), ds)
        assert report.accuracy == pytest.approx(0.7)
        assert report.recall1 == pytest.approx(0.6)
        assert report.precision1 == pytest.approx(0.75)
        assert report.recall0 == pytest.approx(0.8)
        assert report.precision0 == pytest.approx(4 / 6)

    def test_fields_in_unit_interval(self):
        rng = np.random.default_rng(11)
        rows = (rng.random((30, 4)) < 0.5).astype(np.uint8)
        labels = (rng.random(30) < 0.5).astype(np.uint8)
        if labels.all() or not labels.any():
            labels[0] ^= 1
        ds = make_ds(rows, labels)
        report = score_report(train("nbayes", ds), ds)
        for value in report.to_dict().values():
            assert 0.0 <= value <= 1.0
