"""Manifold fidelity/diversity metrics between two binary row sets.

Precision, recall, density and coverage are computed from k-NN ball
radii in Hamming space. Ball membership uses closed balls (distance <=
radius): Hamming distances are small integers, ties at the radius are
common, and a closed ball keeps exact duplicates of a training row
inside that row's own ball.

All four metrics are exact ratios of integer counts; no tolerance is
needed when checking against a brute-force reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitops import hamming_cdist, hamming_self_dist

DEFAULT_K = 5


@dataclass(frozen=True)
class KnnRadii:
    """Per-row distance to the k-th nearest neighbour within one set."""

    k: int
    radii: np.ndarray

    def __post_init__(self):
        r = np.ascontiguousarray(self.radii, dtype=np.int64)
        r.setflags(write=False)
        object.__setattr__(self, "radii", r)


@dataclass(frozen=True)
class SimilarityReport:
    precision: float
    recall: float
    density: float
    coverage: float
    sum: float
    k: int
    n_real: int
    n_synth: int

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "density": self.density,
            "coverage": self.coverage,
            "sum": self.sum,
            "k": self.k,
            "n_real": self.n_real,
            "n_synth": self.n_synth,
        }


def _as_bits(rows: np.ndarray) -> np.ndarray:
    bits = np.ascontiguousarray(rows, dtype=np.uint8)
    if bits.ndim != 2 or bits.shape[0] == 0:
        raise ValueError(f"expected a non-empty 2-d bit matrix, got shape {bits.shape}")
    return bits


def knn_radii(rows: np.ndarray, k: int) -> KnnRadii:
    """Distance to the k-th nearest other row, for every row of the set.

    The radius is the k-th order statistic of the multiset of distances
    to the other rows (self excluded), so duplicated distances count
    with multiplicity.
    """
    bits = _as_bits(rows)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if bits.shape[0] <= k:
        raise ValueError(f"need at least k+1={k + 1} rows, got {bits.shape[0]}")
    dists = hamming_self_dist(bits)
    radii = np.partition(dists, k - 1, axis=1)[:, k - 1]
    return KnnRadii(k=k, radii=radii)


def _cross_membership(x_rows: np.ndarray, y_rows: np.ndarray, k: int):
    """Boolean (|X|, |Y|) matrix: y_j inside the closed ball around x_i."""
    x_bits = _as_bits(x_rows)
    y_bits = _as_bits(y_rows)
    radii = knn_radii(x_bits, k).radii
    dists = hamming_cdist(x_bits, y_bits)
    return dists <= radii[:, None]


def precision(x_rows: np.ndarray, y_rows: np.ndarray, k: int = DEFAULT_K) -> float:
    """Fraction of synthetic rows inside the union of real k-NN balls."""
    member = _cross_membership(x_rows, y_rows, k)
    return float(member.any(axis=0).sum()) / member.shape[1]


def recall(x_rows: np.ndarray, y_rows: np.ndarray, k: int = DEFAULT_K) -> float:
    """Fraction of real rows inside the union of synthetic k-NN balls."""
    return precision(y_rows, x_rows, k)


def density(x_rows: np.ndarray, y_rows: np.ndarray, k: int = DEFAULT_K) -> float:
    """Ball-membership count of synthetic rows, normalised by k * |Y|.

    Counts every ball a synthetic row falls into, so the value may
    exceed 1 and is robust to isolated real outliers.
    """
    member = _cross_membership(x_rows, y_rows, k)
    return float(member.sum()) / (k * member.shape[1])


def coverage(x_rows: np.ndarray, y_rows: np.ndarray, k: int = DEFAULT_K) -> float:
    """Fraction of real k-NN balls containing at least one synthetic row."""
    member = _cross_membership(x_rows, y_rows, k)
    return float(member.any(axis=1).sum()) / member.shape[0]


def similarity_report(
    x_rows: np.ndarray, y_rows: np.ndarray, k: int = DEFAULT_K
) -> SimilarityReport:
    """All four metrics from one pair of radii computations."""
    x_bits = _as_bits(x_rows)
    y_bits = _as_bits(y_rows)
    x_radii = knn_radii(x_bits, k).radii
    y_radii = knn_radii(y_bits, k).radii
    dists = hamming_cdist(x_bits, y_bits)
    in_x_balls = dists <= x_radii[:, None]
    in_y_balls = dists <= y_radii[None, :]
    n_x, n_y = dists.shape

    prec = float(in_x_balls.any(axis=0).sum()) / n_y
    rec = float(in_y_balls.any(axis=1).sum()) / n_x
    dens = float(in_x_balls.sum()) / (k * n_y)
    cov = float(in_x_balls.any(axis=1).sum()) / n_x
    return SimilarityReport(
        precision=prec,
        recall=rec,
        density=dens,
        coverage=cov,
        sum=prec + rec + dens + cov,
        k=k,
        n_real=n_x,
        n_synth=n_y,
    )
