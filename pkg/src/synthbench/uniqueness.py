"""Exact-copy decomposition of a generated multiset against training data.

Copy detection compares feature bits only: the privacy concern is
re-identification via the medical-history vector, and a 1-bit label
would let near-copies masquerade as novel. Matching is hash-based on
packed rows (no sorting), which keeps a 100k-row report cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitops import hamming_cdist, hamming_self_dist, row_keys
from .dataset import LabeledDataset


@dataclass(frozen=True)
class UniquenessReport:
    generated_total: int
    copies_of_training: int
    novel_total: int
    novel_duplicates: int
    unique_novel_count: int
    copy_fraction: float

    def to_dict(self) -> dict:
        return {
            "generated_total": self.generated_total,
            "copies_of_training": self.copies_of_training,
            "novel_total": self.novel_total,
            "novel_duplicates": self.novel_duplicates,
            "unique_novel_count": self.unique_novel_count,
            "copy_fraction": self.copy_fraction,
        }


def _feature_bits(data) -> np.ndarray:
    if isinstance(data, LabeledDataset):
        return data.features
    return np.ascontiguousarray(data, dtype=np.uint8)


def uniqueness_report(train, generated) -> tuple[UniquenessReport, np.ndarray]:
    """Decompose generated rows into training copies / novel dups / unique novel.

    Accepts LabeledDatasets or plain bit matrices. Returns the report and
    the indices (into `generated`) of the first occurrence of each unique
    novel row, in generation order, for downstream sampling.
    """
    train_bits = _feature_bits(train)
    gen_bits = _feature_bits(generated)
    if train_bits.shape[1] != gen_bits.shape[1]:
        raise ValueError(
            f"dimension mismatch: train d={train_bits.shape[1]}, "
            f"generated d={gen_bits.shape[1]}"
        )
    train_keys = set(row_keys(train_bits))
    gen_keys = row_keys(gen_bits)

    copies = 0
    seen_novel: set[bytes] = set()
    unique_novel_idx: list[int] = []
    for i, key in enumerate(gen_keys):
        if key in train_keys:
            copies += 1
        elif key in seen_novel:
            continue
        else:
            seen_novel.add(key)
            unique_novel_idx.append(i)

    total = len(gen_keys)
    novel = total - copies
    unique_novel = len(unique_novel_idx)
    report = UniquenessReport(
        generated_total=total,
        copies_of_training=copies,
        novel_total=novel,
        novel_duplicates=novel - unique_novel,
        unique_novel_count=unique_novel,
        copy_fraction=copies / total if total else 0.0,
    )
    return report, np.array(unique_novel_idx, dtype=np.intp)


def authenticity(train, generated) -> float:
    """Fraction of generated rows that are not near-copies of training rows.

    A generated row g with nearest training row t is flagged as a
    near-copy when d(t, g) is strictly smaller than the distance from t
    to its own nearest training neighbour; ties count as authentic.
    Nearest-row ties resolve to the lowest training index.
    """
    train_bits = _feature_bits(train)
    gen_bits = _feature_bits(generated)
    if train_bits.shape[0] < 2:
        raise ValueError("authenticity needs at least 2 training rows")
    if gen_bits.shape[0] == 0:
        raise ValueError("no generated rows")
    nn_gap = np.partition(hamming_self_dist(train_bits), 0, axis=1)[:, 0]
    dists = hamming_cdist(train_bits, gen_bits)
    nearest_train = np.argmin(dists, axis=0)
    d_to_nearest = dists[nearest_train, np.arange(gen_bits.shape[0])]
    flagged = d_to_nearest < nn_gap[nearest_train]
    return float((~flagged).sum()) / gen_bits.shape[0]
