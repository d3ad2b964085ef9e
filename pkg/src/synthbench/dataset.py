"""Binary labeled datasets: ingestion, cleaning, splitting, rebalancing.

The universal currency of the package is a LabeledDataset: an N x d
matrix of 0/1 feature indicators plus one binary outcome per row
(0 = died/transplant, 1 = survived in the motivating cohort). All
sampling operations are pure functions of (inputs, seed).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .bitops import row_keys
from .seeding import rng_from


class DataFormatError(ValueError):
    """Raised when a CSV or constructed dataset violates the binary schema."""


class PoolShortfallError(ValueError):
    """Raised when a sampling pool cannot supply enough rows of some class."""

    def __init__(self, label: int, needed: int, available: int):
        self.label = label
        self.needed = needed
        self.available = available
        super().__init__(
            f"pool has {available} rows of class {label}, "
            f"need {needed} (shortfall {needed - available})"
        )


@dataclass(frozen=True)
class LabeledDataset:
    """Immutable binary feature matrix with one 0/1 outcome per row."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    label_name: str = "label"

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.uint8)
        labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise DataFormatError(f"need an N>=1 x d>=1 feature matrix, got {feats.shape}")
        if labels.shape != (feats.shape[0],):
            raise DataFormatError(
                f"labels shape {labels.shape} does not match {feats.shape[0]} rows"
            )
        if not np.isin(feats, (0, 1)).all():
            raise DataFormatError("feature values must all be 0 or 1")
        if not np.isin(labels, (0, 1)).all():
            raise DataFormatError("labels must all be 0 or 1")
        names = tuple(str(n) for n in self.feature_names)
        if len(names) != feats.shape[1]:
            raise DataFormatError(
                f"{len(names)} feature names for {feats.shape[1]} columns"
            )
        if len(set(names)) != len(names):
            raise DataFormatError("duplicate feature names")
        feats.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", names)

    @property
    def row_count(self) -> int:
        return self.features.shape[0]

    @property
    def feature_count(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> dict[int, int]:
        """Row count per label value, always keyed 0 and 1."""
        return {c: int((self.labels == c).sum()) for c in (0, 1)}

    def class_indices(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)

    def subset(self, indices) -> "LabeledDataset":
        """New dataset from the given row indices, in the given order."""
        idx = np.asarray(indices, dtype=np.intp)
        return LabeledDataset(
            self.features[idx], self.labels[idx], self.feature_names, self.label_name
        )

    def with_rows(self, features: np.ndarray, labels: np.ndarray) -> "LabeledDataset":
        """New dataset with the same schema but different rows."""
        return LabeledDataset(features, labels, self.feature_names, self.label_name)


@dataclass(frozen=True)
class FoldPlan:
    """Stratified fold assignment: one fold index in [0, k) per row."""

    k: int
    assignments: np.ndarray
    seed: int = field(compare=False)

    def __post_init__(self):
        a = np.ascontiguousarray(self.assignments, dtype=np.intp)
        a.setflags(write=False)
        object.__setattr__(self, "assignments", a)

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def load_csv(path, label_column: str) -> LabeledDataset:
    """Load a binary labeled dataset from a headered CSV of 0/1 cells.

    The label column is removed from the features; remaining column
    order is preserved.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: no rows") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise DataFormatError(f"{path}: no column named {label_column!r}")
        label_idx = header.index(label_column)
        rows = []
        for line_no, cells in enumerate(reader, start=2):
            if len(cells) != len(header):
                raise DataFormatError(
                    f"{path}: row at line {line_no} has {len(cells)} cells, "
                    f"expected {len(header)}"
                )
            parsed = []
            for col, cell in zip(header, cells):
                cell = cell.strip()
                if cell not in ("0", "1"):
                    raise DataFormatError(
                        f"{path}: non-binary cell {cell!r} at line {line_no}, "
                        f"column {col!r}"
                    )
                parsed.append(int(cell))
            rows.append(parsed)
    if not rows:
        raise DataFormatError(f"{path}: no rows")
    matrix = np.array(rows, dtype=np.uint8)
    labels = matrix[:, label_idx]
    features = np.delete(matrix, label_idx, axis=1)
    names = tuple(h for i, h in enumerate(header) if i != label_idx)
    return LabeledDataset(features, labels, names, label_name=label_column)


def save_csv(ds: LabeledDataset, path) -> None:
    """Write a dataset as CSV with the same schema load_csv accepts."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.feature_names) + [ds.label_name])
        for feats, label in zip(ds.features, ds.labels):
            writer.writerow([int(v) for v in feats] + [int(label)])


def clean(ds: LabeledDataset) -> LabeledDataset:
    """Drop all-zero feature rows, then exact (features, label) duplicates.

    First occurrence of a duplicate is kept; row order is otherwise
    preserved. The dedup key includes the label, so a feature row that
    appears with both outcomes survives twice.
    """
    nonzero = ds.features.any(axis=1)
    keep = []
    seen = set()
    keys = row_keys(ds.features)
    for i in range(ds.row_count):
        if not nonzero[i]:
            continue
        key = (keys[i], int(ds.labels[i]))
        if key in seen:
            continue
        seen.add(key)
        keep.append(i)
    if not keep:
        raise DataFormatError("all rows removed by cleaning")
    return ds.subset(keep)


def stratified_kfold(ds: LabeledDataset, k: int, seed: int) -> FoldPlan:
    """Assign every row to one of k folds with proportional class representation.

    Each class is shuffled with the seeded generator and dealt
    round-robin over folds; the deal starts at fold (seed mod k) and the
    counter continues across classes, so per-class fold counts differ by
    at most one row, remainder rows land on a seed-dependent fold, and
    no fold is left empty whenever N >= k.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if k > ds.row_count:
        raise ValueError(f"k={k} exceeds the {ds.row_count} available rows")
    rng = rng_from(seed, "kfold", k)
    cursor = seed % k
    assignments = np.empty(ds.row_count, dtype=np.intp)
    for label in (0, 1):
        idx = ds.class_indices(label)
        shuffled = rng.permutation(idx)
        for row in shuffled:
            assignments[row] = cursor % k
            cursor += 1
    return FoldPlan(k=k, assignments=assignments, seed=seed)


def sample_matched(
    pool: LabeledDataset, reference: LabeledDataset, seed: int
) -> LabeledDataset:
    """Draw |reference| rows from the pool matching reference class counts.

    Sampling is without replacement. Selected rows are emitted in pool
    order, so a pool that exactly covers the requirement reproduces
    itself regardless of seed.
    """
    rng = rng_from(seed, "matched")
    ref_counts = reference.class_counts()
    chosen: list[np.ndarray] = []
    for label in (0, 1):
        needed = ref_counts[label]
        candidates = pool.class_indices(label)
        if needed > candidates.size:
            raise PoolShortfallError(label, needed, candidates.size)
        if needed:
            chosen.append(rng.choice(candidates, size=needed, replace=False))
    idx = np.sort(np.concatenate(chosen))
    return pool.subset(idx)


def balance(
    original: LabeledDataset,
    pool: LabeledDataset | None,
    mode: str,
    seed: int,
) -> LabeledDataset:
    """Return a class-balanced training set built from `original`.

    upsample   - minority rows resampled with replacement until balanced.
    downsample - majority rows randomly subsampled to the minority count.
    augment    - minority topped up with pool rows of the minority class;
                 if the pool runs out first, the majority is downsampled
                 to meet the enlarged minority.
    """
    counts = original.class_counts()
    if counts[0] == 0 or counts[1] == 0:
        raise ValueError("balance needs both classes present")
    minority = 0 if counts[0] <= counts[1] else 1
    majority = 1 - minority
    rng = rng_from(seed, "balance", mode)

    if mode == "upsample":
        deficit = counts[majority] - counts[minority]
        extra = rng.choice(original.class_indices(minority), size=deficit, replace=True)
        feats = np.concatenate([original.features, original.features[extra]])
        labels = np.concatenate([original.labels, original.labels[extra]])
        return original.with_rows(feats, labels)

    if mode == "downsample":
        keep_major = rng.choice(
            original.class_indices(majority), size=counts[minority], replace=False
        )
        idx = np.sort(np.concatenate([original.class_indices(minority), keep_major]))
        return original.subset(idx)

    if mode == "augment":
        if pool is None:
            raise ValueError("augment mode requires a pool")
        deficit = counts[majority] - counts[minority]
        pool_idx = pool.class_indices(minority)
        take = min(deficit, pool_idx.size)
        extra = (
            rng.choice(pool_idx, size=take, replace=False)
            if take
            else np.empty(0, dtype=np.intp)
        )
        new_minority = counts[minority] + take
        if new_minority == 0:
            raise ValueError("augment would produce an empty minority class")
        if new_minority < counts[majority]:
            keep_major = rng.choice(
                original.class_indices(majority), size=new_minority, replace=False
            )
        else:
            keep_major = original.class_indices(majority)
        keep = np.sort(np.concatenate([original.class_indices(minority), keep_major]))
        feats = np.concatenate([original.features[keep], pool.features[extra]])
        labels = np.concatenate([original.labels[keep], pool.labels[extra]])
        return original.with_rows(feats, labels)

    raise ValueError(f"unknown balance mode {mode!r}")
