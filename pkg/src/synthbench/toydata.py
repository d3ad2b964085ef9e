"""Bundled two-cluster toy dataset used by examples and the test suite.

400 rows, 16 binary features, 80/20 class imbalance. Class 1 (the
majority, "survived") leans on the first half of the features, class 0
on the second half, with enough overlap that a classifier trained on
the imbalanced data underserves the minority class. Rows are distinct
per (features, label) and never all-zero, so clean() is a no-op.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from .dataset import LabeledDataset, load_csv
from .seeding import rng_from

BUNDLED_CSV = "two_cluster_400x16.csv"
LABEL_COLUMN = "survived"


def make_two_cluster(
    n_rows: int = 400,
    n_features: int = 16,
    minority_fraction: float = 0.2,
    seed: int = 20240801,
) -> LabeledDataset:
    """Deterministically regenerate the bundled dataset (or variants of it)."""
    rng = rng_from(seed, "two-cluster")
    half = n_features // 2
    jitter = rng.uniform(-0.06, 0.06, size=n_features)
    p_major = np.where(np.arange(n_features) < half, 0.62, 0.38) + jitter
    p_minor = np.where(np.arange(n_features) < half, 0.38, 0.62) + jitter

    n_minor = int(round(n_rows * minority_fraction))
    n_major = n_rows - n_minor
    rows: list[np.ndarray] = []
    labels: list[int] = []
    seen: set[tuple] = set()
    for label, probs, needed in ((1, p_major, n_major), (0, p_minor, n_minor)):
        taken = 0
        while taken < needed:
            bits = (rng.random(n_features) < probs).astype(np.uint8)
            key = (label, bits.tobytes())
            if not bits.any() or key in seen:
                continue
            seen.add(key)
            rows.append(bits)
            labels.append(label)
            taken += 1
    order = rng.permutation(n_rows)
    features = np.stack(rows)[order]
    names = tuple(f"x{i:02d}" for i in range(n_features))
    return LabeledDataset(
        features, np.array(labels, dtype=np.uint8)[order], names, LABEL_COLUMN
    )


def two_cluster_dataset() -> LabeledDataset:
    """Load the bundled CSV copy of make_two_cluster()'s default output."""
    path = resources.files("synthbench").joinpath("data", BUNDLED_CSV)
    with resources.as_file(path) as csv_path:
        return load_csv(csv_path, LABEL_COLUMN)
