"""Downstream predictive models and the scores the utility harness reports.

Five classifier kinds (logistic regression, Bernoulli naive Bayes,
k-NN over Hamming distance, random forest, linear SVM) plus an optional
MLP. Each is deterministic given (training data, config, seed) and
scores rows with a single real number where higher means more
confidence in label 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nets
from .bitops import hamming_cdist
from .dataset import LabeledDataset
from .seeding import rng_from

DEFAULT_KINDS = ("logreg", "nbayes", "knn", "rforest", "svm")

DEFAULT_CONFIG = {
    "logreg": {"lr": 0.1, "epochs": 200, "batch": 32},
    "nbayes": {},
    "knn": {"k": 5},
    "rforest": {"n_trees": 100, "max_depth": 12, "max_features": "sqrt",
                "bootstrap": True, "min_samples_split": 2},
    "svm": {"lr": 0.1, "epochs": 200, "batch": 32, "c": 1.0},
    "mlp": {"lr": 1e-3, "epochs": 100, "batch": 32, "hidden": 32},
}


@dataclass(frozen=True)
class ScoreReport:
    """AUC plus threshold-0.5 confusion metrics for one scoring pass."""

    auc_roc: float
    accuracy: float
    precision0: float
    precision1: float
    recall0: float
    recall1: float

    def to_dict(self) -> dict:
        return {
            "auc_roc": self.auc_roc,
            "accuracy": self.accuracy,
            "precision0": self.precision0,
            "precision1": self.precision1,
            "recall0": self.recall0,
            "recall1": self.recall1,
        }

    METRICS = ("auc_roc", "accuracy", "precision0", "precision1", "recall0", "recall1")


class TrainedClassifier:
    """Base: stores kind and feature width; subclasses score rows."""

    kind: str

    def __init__(self, kind: str, n_features: int):
        self.kind = kind
        self.n_features = n_features

    def _check(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows)
        if rows.ndim != 2 or rows.shape[1] != self.n_features:
            raise ValueError(
                f"expected (N, {self.n_features}) rows, got shape {rows.shape}"
            )
        return rows

    def predict_scores(self, rows: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict_proba(self, rows: np.ndarray) -> np.ndarray:
        """Score mapped to [0,1] for 0.5-thresholding; identity by default."""
        return self.predict_scores(rows)


class LogisticRegression(TrainedClassifier):
    def __init__(self, w, b):
        super().__init__("logreg", w.shape[0])
        self.w = w
        self.b = b

    def predict_scores(self, rows):
        rows = self._check(rows)
        if rows.shape[0] == 0:
            return np.empty(0)
        return nets.sigmoid(rows.astype(np.float64) @ self.w + self.b)


def logreg_loss_and_gradient(w, b, features, labels):
    """Mean cross-entropy and its gradient for a sigmoid linear model."""
    x = features.astype(np.float64)
    y = labels.astype(np.float64)
    z = x @ w + b
    p = nets.sigmoid(z)
    softplus = np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))
    loss = float((softplus - z * y).mean())
    err = (p - y) / x.shape[0]
    return loss, x.T @ err, float(err.sum())


def _train_logreg(ds, config, seed):
    rng = rng_from(seed, "logreg")
    x, y = ds.features, ds.labels
    w = np.zeros(ds.feature_count)
    b = 0.0
    batch = min(config["batch"], ds.row_count)
    for _ in range(config["epochs"]):
        order = rng.permutation(ds.row_count)
        for lo in range(0, ds.row_count, batch):
            idx = order[lo:lo + batch]
            _, gw, gb = logreg_loss_and_gradient(w, b, x[idx], y[idx])
            w -= config["lr"] * gw
            b -= config["lr"] * gb
    return LogisticRegression(w, b)


class BernoulliNaiveBayes(TrainedClassifier):
    def __init__(self, log_prior, log_p, log_q):
        # log_p[c] = log P(f=1|y=c), log_q[c] = log P(f=0|y=c); Laplace alpha=1
        super().__init__("nbayes", log_p.shape[1])
        self.log_prior = log_prior
        self.log_p = log_p
        self.log_q = log_q

    def predict_scores(self, rows):
        rows = self._check(rows).astype(np.float64)
        if rows.shape[0] == 0:
            return np.empty(0)
        joint = np.empty((rows.shape[0], 2))
        for c in (0, 1):
            joint[:, c] = (
                self.log_prior[c]
                + rows @ self.log_p[c]
                + (1.0 - rows) @ self.log_q[c]
            )
        return nets.sigmoid(joint[:, 1] - joint[:, 0])


def _train_nbayes(ds, config, seed):
    counts = ds.class_counts()
    log_prior = np.empty(2)
    log_p = np.empty((2, ds.feature_count))
    log_q = np.empty((2, ds.feature_count))
    for c in (0, 1):
        n = counts[c]
        ones = ds.features[ds.labels == c].sum(axis=0) if n else np.zeros(ds.feature_count)
        p1 = (ones + 1.0) / (n + 2.0)
        log_p[c] = np.log(p1)
        log_q[c] = np.log(1.0 - p1)
        # -inf prior makes an absent class lose every posterior comparison
        log_prior[c] = np.log(n / ds.row_count) if n else -np.inf
    return BernoulliNaiveBayes(log_prior, log_p, log_q)


class KnnClassifier(TrainedClassifier):
    def __init__(self, features, labels, k):
        super().__init__("knn", features.shape[1])
        self.features = features
        self.labels = labels
        self.k = k

    def predict_scores(self, rows):
        rows = self._check(rows)
        if rows.shape[0] == 0:
            return np.empty(0)
        dists = hamming_cdist(np.asarray(rows, dtype=np.uint8), self.features)
        # stable sort breaks distance ties by training-row index
        order = np.argsort(dists, axis=1, kind="stable")[:, : self.k]
        return self.labels[order].mean(axis=1)


def _train_knn(ds, config, seed):
    k = min(config["k"], ds.row_count)
    return KnnClassifier(ds.features, ds.labels.astype(np.float64), k)


class _TreeNode:
    __slots__ = ("feature", "left", "right", "value")

    def __init__(self, value=None, feature=None, left=None, right=None):
        self.value = value
        self.feature = feature
        self.left = left
        self.right = right


def _gini_pair(n1_left, n_left, n1_right, n_right):
    """Weighted Gini impurity of a binary split, scaled by total count."""
    total = 0.0
    for n1, n in ((n1_left, n_left), (n1_right, n_right)):
        if n:
            p = n1 / n
            total += n * 2.0 * p * (1.0 - p)
    return total / (n_left + n_right)


def _grow_tree(x, y, idx, depth, config, rng):
    n = idx.size
    n1 = int(y[idx].sum())
    if (
        depth >= config["max_depth"]
        or n < config["min_samples_split"]
        or n1 == 0
        or n1 == n
    ):
        return _TreeNode(value=n1 / n)
    m = config["_n_candidates"]
    # full subset keeps natural feature order so ties break by lowest index
    if m == x.shape[1]:
        candidates = np.arange(m)
    else:
        candidates = rng.choice(x.shape[1], size=m, replace=False)
    best = None
    for f in candidates:
        bits = x[idx, f]
        n_right = int(bits.sum())
        n_left = n - n_right
        if n_left == 0 or n_right == 0:
            continue
        n1_right = int(y[idx[bits == 1]].sum())
        gini = _gini_pair(n1 - n1_right, n_left, n1_right, n_right)
        if best is None or gini < best[0]:
            best = (gini, f)
    if best is None:
        return _TreeNode(value=n1 / n)
    f = best[1]
    bits = x[idx, f]
    left = _grow_tree(x, y, idx[bits == 0], depth + 1, config, rng)
    right = _grow_tree(x, y, idx[bits == 1], depth + 1, config, rng)
    return _TreeNode(feature=f, left=left, right=right)


def _tree_scores(node, rows, idx, out):
    if node.value is not None:
        out[idx] = node.value
        return
    bits = rows[idx, node.feature]
    _tree_scores(node.left, rows, idx[bits == 0], out)
    _tree_scores(node.right, rows, idx[bits == 1], out)


class RandomForest(TrainedClassifier):
    def __init__(self, trees, n_features):
        super().__init__("rforest", n_features)
        self.trees = trees

    def predict_scores(self, rows):
        rows = self._check(rows)
        if rows.shape[0] == 0:
            return np.empty(0)
        rows = np.asarray(rows, dtype=np.uint8)
        total = np.zeros(rows.shape[0])
        scratch = np.empty(rows.shape[0])
        all_idx = np.arange(rows.shape[0])
        for tree in self.trees:
            _tree_scores(tree, rows, all_idx, scratch)
            total += scratch
        return total / len(self.trees)


def _train_rforest(ds, config, seed):
    x, y = ds.features, ds.labels
    d = ds.feature_count
    config = dict(config)
    mf = config["max_features"]
    config["_n_candidates"] = (
        max(1, int(round(np.sqrt(d)))) if mf == "sqrt" else min(int(mf), d)
    )
    trees = []
    for t in range(config["n_trees"]):
        rng = rng_from(seed, "tree", t)
        if config["bootstrap"]:
            idx = rng.integers(0, ds.row_count, size=ds.row_count)
        else:
            idx = np.arange(ds.row_count)
        trees.append(_grow_tree(x, y, idx, 0, config, rng))
    return RandomForest(trees, d)


class LinearSvm(TrainedClassifier):
    def __init__(self, w, b):
        super().__init__("svm", w.shape[0])
        self.w = w
        self.b = b

    def predict_scores(self, rows):
        rows = self._check(rows)
        if rows.shape[0] == 0:
            return np.empty(0)
        return rows.astype(np.float64) @ self.w + self.b

    def predict_proba(self, rows):
        return nets.sigmoid(self.predict_scores(rows))


def _train_svm(ds, config, seed):
    rng = rng_from(seed, "svm")
    x = ds.features.astype(np.float64)
    y = np.where(ds.labels == 1, 1.0, -1.0)
    w = np.zeros(ds.feature_count)
    b = 0.0
    lam = 1.0 / (config["c"] * ds.row_count)
    batch = min(config["batch"], ds.row_count)
    for _ in range(config["epochs"]):
        order = rng.permutation(ds.row_count)
        for lo in range(0, ds.row_count, batch):
            idx = order[lo:lo + batch]
            margin = y[idx] * (x[idx] @ w + b)
            active = margin < 1.0
            gw = lam * w - (y[idx][active, None] * x[idx][active]).sum(axis=0) / idx.size
            gb = -y[idx][active].sum() / idx.size
            w -= config["lr"] * gw
            b -= config["lr"] * gb
    return LinearSvm(w, b)


class MlpClassifier(TrainedClassifier):
    def __init__(self, net):
        super().__init__("mlp", net.in_width)
        self.net = net

    def predict_scores(self, rows):
        rows = self._check(rows)
        if rows.shape[0] == 0:
            return np.empty(0)
        logits, _ = nets.forward(self.net, rows.astype(np.float64))
        return nets.sigmoid(logits[:, 0])


def _train_mlp(ds, config, seed):
    rng = rng_from(seed, "mlp")
    net = nets.init_mlp(
        (ds.feature_count, config["hidden"], 1), ("relu", "linear"), rng
    )
    state = nets.AdamState.for_net(net)
    x = ds.features.astype(np.float64)
    y = ds.labels.astype(np.float64)[:, None]
    batch = min(config["batch"], ds.row_count)
    for epoch in range(config["epochs"]):
        order = rng.permutation(ds.row_count)
        for bi, lo in enumerate(range(0, ds.row_count, batch)):
            idx = order[lo:lo + batch]
            _, grads, _ = nets.mlp_backprop(net, x[idx], "bce", y[idx])
            nets.adam_step(net, grads, state, config["lr"])
            nets.check_finite(net, epoch, bi)
    return MlpClassifier(net)


_TRAINERS = {
    "logreg": _train_logreg,
    "nbayes": _train_nbayes,
    "knn": _train_knn,
    "rforest": _train_rforest,
    "svm": _train_svm,
    "mlp": _train_mlp,
}

_ONE_CLASS_OK = ("nbayes", "knn")


def train(kind: str, train_set: LabeledDataset, config: dict | None = None,
          seed: int = 0) -> TrainedClassifier:
    """Train one classifier kind; config keys override DEFAULT_CONFIG."""
    if kind not in _TRAINERS:
        raise ValueError(f"unknown classifier kind {kind!r}")
    merged = dict(DEFAULT_CONFIG[kind])
    if config:
        unknown = set(config) - set(merged)
        if unknown:
            raise ValueError(f"invalid {kind} hyperparameters: {sorted(unknown)}")
        merged.update(config)
    counts = train_set.class_counts()
    if kind not in _ONE_CLASS_OK and (counts[0] == 0 or counts[1] == 0):
        raise ValueError(f"{kind} needs both classes in the training set")
    return _TRAINERS[kind](train_set, merged, seed)


def predict_scores(model: TrainedClassifier, rows) -> np.ndarray:
    rows = np.asarray(rows)
    if rows.size == 0:
        return np.empty(0)
    scores = model.predict_scores(rows)
    if not np.isfinite(scores).all():
        raise FloatingPointError(f"{model.kind} produced non-finite scores")
    return scores


def auc_roc(scores, labels) -> float:
    """AUC-ROC by the Mann-Whitney rank statistic; ties count 1/2.

    Equivalent to (#(pos,neg) pairs with score_pos > score_neg + 0.5 *
    ties) / (P*N), computed from average ranks in O(n log n).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be equal-length vectors")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative label")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size, dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0  # average of ranks i+1 .. j+1
        i = j + 1
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def score_report(model: TrainedClassifier, test: LabeledDataset) -> ScoreReport:
    """AUC, accuracy and per-class precision/recall from one scoring pass.

    Hard labels come from thresholding the probability-mapped score at
    0.5 (predict 1 when proba >= 0.5). Undefined precision/recall (empty
    denominator) reports 0.
    """
    scores = predict_scores(model, test.features)
    proba = model.predict_proba(test.features)
    auc = auc_roc(scores, test.labels)
    pred = (proba >= 0.5).astype(np.uint8)
    truth = test.labels
    accuracy = float((pred == truth).mean())

    def _ratio(num, den):
        return num / den if den else 0.0

    tp = int(((pred == 1) & (truth == 1)).sum())
    tn = int(((pred == 0) & (truth == 0)).sum())
    fp = int(((pred == 1) & (truth == 0)).sum())
    fn = int(((pred == 0) & (truth == 1)).sum())
    return ScoreReport(
        auc_roc=auc,
        accuracy=accuracy,
        precision0=_ratio(tn, tn + fn),
        precision1=_ratio(tp, tp + fp),
        recall0=_ratio(tn, tn + fp),
        recall1=_ratio(tp, tp + fn),
    )
