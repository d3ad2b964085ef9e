"""Full evaluation protocol: Settings A and B over stratified folds.

Setting A trains classifiers on a matched-size synthetic sample and
tests on the held-out real fold. Setting B trains on the original fold
augmented to class balance with synthetic minority rows (plus
upsampling/downsampling baseline arms). Both select, per measurement,
the classifier with the best held-out AUC; that selection leaks test
information but is kept because it is what the protocol prescribes.

Synthetic pools are restricted to unique novel rows before any utility
sampling (unique_only=False relaxes this for ablation and for the
identity-pool control). Classifier sub-seeds deliberately exclude the
generator id so an identity pool reproduces the original baseline
bit-for-bit at the same master seed.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import classifiers as clf
from .classifiers import ScoreReport
from .dataset import (
    FoldPlan,
    LabeledDataset,
    PoolShortfallError,
    balance,
    sample_matched,
    save_csv,
    stratified_kfold,
)
from .generators import (
    GeneratorSpec,
    grid_search,
    sample,
    trace_rows,
    train_generator,
)
from .nets import TrainingDivergedError
from .seeding import derive_seed
from .uniqueness import uniqueness_report

SETTINGS = ("A", "B", "baseline_up", "baseline_down", "original")


@dataclass(frozen=True)
class PcaEmbedding:
    """Top-2 principal axes of a bit matrix, rows orthonormal."""

    components: np.ndarray
    projections: np.ndarray
    explained_variance: tuple[float, float]


def pca_2d(rows: np.ndarray) -> PcaEmbedding:
    """2-component PCA via SVD of the mean-centered matrix.

    Explained variances use the population convention (divisor N). Sign
    convention: each component's first nonzero coordinate is positive.
    """
    x = np.asarray(rows, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 3 or x.shape[1] < 2:
        raise ValueError(f"need at least 3 rows and 2 columns, got {x.shape}")
    centered = x - x.mean(axis=0)
    if not centered.any():
        raise ValueError("rank-0 data: all rows identical")
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:2].copy()
    for j in range(2):
        nonzero = np.flatnonzero(np.abs(components[j]) > 1e-12)
        if nonzero.size and components[j, nonzero[0]] < 0:
            components[j] = -components[j]
    projections = centered @ components.T
    explained = (s[:2] ** 2) / x.shape[0]
    return PcaEmbedding(components, projections, (float(explained[0]), float(explained[1])))


def export_heatmap(balanced: LabeledDataset, path) -> None:
    """Write a balanced dataset as CSV with class-0 rows first.

    The output uses the ordinary dataset schema, so it round-trips
    through load_csv; within each class the original row order is kept.
    """
    counts = balanced.class_counts()
    if counts[0] != counts[1] or counts[0] == 0:
        raise ValueError(f"need a balanced two-class dataset, got {counts}")
    order = np.concatenate([balanced.class_indices(0), balanced.class_indices(1)])
    save_csv(balanced.subset(order), path)


@dataclass(frozen=True)
class UtilityMeasurement:
    """Best-classifier score for one (generator, setting, fold, rep) arm."""

    generator: str
    setting: str
    fold: int
    rep: int
    classifier: str
    score: ScoreReport
    train_class_counts: tuple[int, int]
    synth_rows_used: int | None
    all_auc: dict

    def to_dict(self) -> dict:
        return {
            "type": "measurement",
            "generator": self.generator,
            "setting": self.setting,
            "fold": self.fold,
            "rep": self.rep,
            "classifier": self.classifier,
            **self.score.to_dict(),
            "train_class_counts": {
                "0": self.train_class_counts[0],
                "1": self.train_class_counts[1],
            },
            "synth_rows_used": self.synth_rows_used,
            "all_auc": self.all_auc,
        }


@dataclass(frozen=True)
class SkipRecord:
    generator: str
    setting: str
    fold: int
    rep: int
    reason: str

    def to_dict(self) -> dict:
        return {
            "type": "skip",
            "generator": self.generator,
            "setting": self.setting,
            "fold": self.fold,
            "rep": self.rep,
            "reason": self.reason,
        }


@dataclass
class HarnessOptions:
    classifiers: tuple = clf.DEFAULT_KINDS
    classifier_config: dict = field(default_factory=dict)
    n_generate: int = 100_000
    unique_only: bool = True
    label_mode: str = "conditional"
    grid_mode: str = "per_fold"  # or "global"
    k_sim: int = 5


@dataclass
class RunResult:
    measurements: list = field(default_factory=list)
    skips: list = field(default_factory=list)
    traces: dict = field(default_factory=dict)
    uniqueness: dict = field(default_factory=dict)
    leaderboards: dict = field(default_factory=dict)
    fold_log: dict = field(default_factory=dict)

    def extend(self, other: "RunResult") -> None:
        self.measurements.extend(other.measurements)
        self.skips.extend(other.skips)
        self.traces.update(other.traces)
        self.uniqueness.update(other.uniqueness)
        self.leaderboards.update(other.leaderboards)
        self.fold_log.update(other.fold_log)


def _fold_pair(original: LabeledDataset, folds: FoldPlan, fold: int):
    return (
        original.subset(folds.train_indices(fold)),
        original.subset(folds.test_indices(fold)),
    )


def _best_classifier(train_ds, test_ds, options, master, fold, rep):
    """Train every configured kind, keep the best held-out AUC.

    Seeds mix (master, fold, rep, kind) only: two arms with identical
    training data produce bit-identical classifiers.
    """
    best_kind = None
    best_report = None
    all_auc = {}
    for kind in options.classifiers:
        model = clf.train(
            kind,
            train_ds,
            options.classifier_config.get(kind),
            derive_seed(master, "clf", fold, rep, kind),
        )
        report = clf.score_report(model, test_ds)
        all_auc[kind] = report.auc_roc
        if best_report is None or report.auc_roc > best_report.auc_roc:
            best_kind, best_report = kind, report
    return best_kind, best_report, all_auc


def build_pools(original, folds, generators, master, options):
    """Train each generator per fold and build its sampling pool.

    Returns (pools, result) where pools maps (name, fold) to a
    LabeledDataset or to None when the pool is unusable; result carries
    traces, uniqueness reports, grid leaderboards and the skip reason
    for every unusable pool (under key (name, fold) in result.uniqueness
    / as reason strings in pools_reason).
    """
    result = RunResult()
    pools = {}
    reasons = {}
    for fold in range(folds.k):
        train_ds, test_ds = _fold_pair(original, folds, fold)
        result.fold_log[fold] = {
            "train": folds.train_indices(fold).tolist(),
            "test": folds.test_indices(fold).tolist(),
        }
        for name, gen in generators.items():
            spec = gen
            if isinstance(gen, list):  # a grid of specs
                if options.grid_mode == "global":
                    if name not in result.leaderboards:
                        best, board = grid_search(
                            original, gen, options.k_sim, derive_seed(master, "grid", name)
                        )
                        result.leaderboards[name] = {"scope": "global", "board": board,
                                                     "best_index": board[0]["index"]}
                    best_idx = result.leaderboards[name]["best_index"]
                    spec = gen[best_idx]
                else:
                    best, board = grid_search(
                        train_ds, gen, options.k_sim,
                        derive_seed(master, "grid", name, fold),
                    )
                    result.leaderboards[(name, fold)] = {
                        "scope": f"fold{fold}", "board": board,
                        "best_index": board[0]["index"],
                    }
                    spec = best

            if isinstance(spec, LabeledDataset):
                pool_rows = spec
            elif spec.kind == "identity":
                pool_rows = train_ds
            else:
                try:
                    model = train_generator(
                        train_ds,
                        replace(spec, seed=derive_seed(master, "train", name, fold, spec.seed)),
                    )
                except (ValueError, TrainingDivergedError) as exc:
                    pools[(name, fold)] = None
                    reasons[(name, fold)] = f"generator training failed: {exc}"
                    continue
                result.traces[(name, fold)] = trace_rows(model)
                pool_rows = sample(
                    model,
                    options.n_generate,
                    derive_seed(master, "poolsample", name, fold),
                    options.label_mode,
                )
            if options.unique_only:
                report, idx = uniqueness_report(train_ds, pool_rows)
                result.uniqueness[(name, fold)] = report.to_dict()
                if idx.size == 0:
                    pools[(name, fold)] = None
                    reasons[(name, fold)] = "unique-novel pool empty"
                    continue
                pools[(name, fold)] = pool_rows.subset(idx)
            else:
                pools[(name, fold)] = pool_rows
    return pools, reasons, result


def run_setting_a(original, folds, generators, reps, master, options,
                  pools=None, reasons=None, shared=None) -> RunResult:
    """Train on matched synthetic samples, test on the held-out fold."""
    if pools is None:
        pools, reasons, shared = build_pools(original, folds, generators, master, options)
    result = RunResult()
    result.extend(shared or RunResult())
    for fold in range(folds.k):
        train_ds, test_ds = _fold_pair(original, folds, fold)
        for name in generators:
            pool = pools[(name, fold)]
            for rep in range(reps):
                if pool is None:
                    result.skips.append(
                        SkipRecord(name, "A", fold, rep, reasons[(name, fold)])
                    )
                    continue
                try:
                    synth = sample_matched(
                        pool, train_ds, derive_seed(master, "draw", name, fold, rep)
                    )
                except PoolShortfallError as exc:
                    result.skips.append(SkipRecord(name, "A", fold, rep, str(exc)))
                    continue
                kind, report, all_auc = _best_classifier(
                    synth, test_ds, options, master, fold, rep
                )
                result.measurements.append(
                    UtilityMeasurement(
                        generator=name,
                        setting="A",
                        fold=fold,
                        rep=rep,
                        classifier=kind,
                        score=report,
                        train_class_counts=(
                            synth.class_counts()[0], synth.class_counts()[1]
                        ),
                        synth_rows_used=synth.row_count,
                        all_auc=all_auc,
                    )
                )
    return result


def run_original_baseline(original, folds, reps, master, options) -> RunResult:
    """Classifiers trained on the raw (imbalanced) training fold."""
    result = RunResult()
    for fold in range(folds.k):
        train_ds, test_ds = _fold_pair(original, folds, fold)
        counts = train_ds.class_counts()
        for rep in range(reps):
            kind, report, all_auc = _best_classifier(
                train_ds, test_ds, options, master, fold, rep
            )
            result.measurements.append(
                UtilityMeasurement(
                    generator="original",
                    setting="original",
                    fold=fold,
                    rep=rep,
                    classifier=kind,
                    score=report,
                    train_class_counts=(counts[0], counts[1]),
                    synth_rows_used=None,
                    all_auc=all_auc,
                )
            )
    return result


def run_setting_b(original, folds, generators, reps, master, options,
                  pools=None, reasons=None, shared=None,
                  include_baseline_arms: bool = True) -> RunResult:
    """Train on class-balanced augmented folds; also run up/down baselines."""
    if pools is None:
        pools, reasons, shared = build_pools(original, folds, generators, master, options)
    result = RunResult()
    result.extend(shared or RunResult())
    for fold in range(folds.k):
        train_ds, test_ds = _fold_pair(original, folds, fold)
        counts = train_ds.class_counts()
        minority = 0 if counts[0] <= counts[1] else 1
        arms = []
        for name in generators:
            arms.append((name, "B", pools[(name, fold)]))
        if include_baseline_arms:
            arms.append(("upsampling", "baseline_up", None))
            arms.append(("downsampling", "baseline_down", None))
        for name, setting, pool in arms:
            for rep in range(reps):
                if setting == "B" and pool is None:
                    result.skips.append(
                        SkipRecord(name, setting, fold, rep, reasons[(name, fold)])
                    )
                    continue
                seed = derive_seed(master, "balance", name, fold, rep)
                try:
                    if setting == "B":
                        balanced = balance(train_ds, pool, "augment", seed)
                    elif setting == "baseline_up":
                        balanced = balance(train_ds, None, "upsample", seed)
                    else:
                        balanced = balance(train_ds, None, "downsample", seed)
                except ValueError as exc:
                    result.skips.append(SkipRecord(name, setting, fold, rep, str(exc)))
                    continue
                kind, report, all_auc = _best_classifier(
                    balanced, test_ds, options, master, fold, rep
                )
                bal_counts = balanced.class_counts()
                synth_used = (
                    bal_counts[minority] - counts[minority] if setting == "B" else None
                )
                result.measurements.append(
                    UtilityMeasurement(
                        generator=name,
                        setting=setting,
                        fold=fold,
                        rep=rep,
                        classifier=kind,
                        score=report,
                        train_class_counts=(bal_counts[0], bal_counts[1]),
                        synth_rows_used=synth_used,
                        all_auc=all_auc,
                    )
                )
    return result


# -------------------------------------------------------------- aggregation


def _population_std(values) -> float:
    return float(np.std(np.asarray(values, dtype=np.float64)))


def aggregate(measurements) -> dict:
    """Mean and std per (generator, setting) over best-classifier scores.

    Both standard deviations from the protocol's ambiguity are emitted:
    "std" pools all measurements (population divisor); "std_across_folds"
    is the population std of per-fold means. Sample-count bookkeeping
    averages the training-set composition of each arm.
    """
    if not measurements:
        raise ValueError("no measurements to aggregate")
    arms: dict = {}
    for m in measurements:
        arms.setdefault((m.generator, m.setting), []).append(m)
    out = {}
    for (gen, setting) in sorted(arms):
        group = arms[(gen, setting)]
        metrics = {}
        for metric in ScoreReport.METRICS:
            values = [getattr(m.score, metric) for m in group]
            by_fold = {}
            for m, v in zip(group, values):
                by_fold.setdefault(m.fold, []).append(v)
            fold_means = [float(np.mean(v)) for _, v in sorted(by_fold.items())]
            metrics[metric] = {
                "mean": float(np.mean(values)),
                "std": _population_std(values),
                "std_across_folds": _population_std(fold_means),
            }
        synth = [m.synth_rows_used for m in group if m.synth_rows_used is not None]
        winners = {}
        for m in group:
            winners[m.classifier] = winners.get(m.classifier, 0) + 1
        out[f"{gen}/{setting}"] = {
            "generator": gen,
            "setting": setting,
            "n_measurements": len(group),
            "metrics": metrics,
            "avg_synth_rows_used": float(np.mean(synth)) if synth else None,
            "avg_train_class_counts": {
                "0": float(np.mean([m.train_class_counts[0] for m in group])),
                "1": float(np.mean([m.train_class_counts[1] for m in group])),
            },
            "best_classifier_counts": dict(sorted(winners.items())),
        }
    return out


# ------------------------------------------------------------ orchestration


def run_utility(original: LabeledDataset, generators: dict, settings=("A", "B"),
                folds_k: int = 5, reps: int = 10, master: int = 0,
                options: HarnessOptions | None = None, outdir=None) -> RunResult:
    """Full protocol: stratified folds, requested settings, original baseline.

    `generators` maps arm names to GeneratorSpec (trained per fold), to a
    fixed LabeledDataset pool, or to a list of GeneratorSpec (a grid,
    resolved per options.grid_mode). Deterministic for a fixed master
    seed: repeat runs write byte-identical outputs.
    """
    options = options or HarnessOptions()
    counts = original.class_counts()
    for label in (0, 1):
        # every test fold needs both classes for AUC scoring
        if counts[label] < folds_k:
            raise ValueError(
                f"class {label} has {counts[label]} rows; the protocol needs "
                f"at least one per fold (k={folds_k})"
            )
    folds = stratified_kfold(original, folds_k, derive_seed(master, "folds"))
    pools, reasons, shared = build_pools(original, folds, generators, master, options)
    result = RunResult()
    result.extend(shared)
    result.extend(run_original_baseline(original, folds, reps, master, options))
    if "A" in settings:
        result.extend(
            run_setting_a(original, folds, generators, reps, master, options,
                          pools=pools, reasons=reasons, shared=RunResult())
        )
    if "B" in settings:
        result.extend(
            run_setting_b(original, folds, generators, reps, master, options,
                          pools=pools, reasons=reasons, shared=RunResult())
        )
    if outdir is not None:
        write_run_outputs(result, outdir)
    return result


def write_run_outputs(result: RunResult, outdir) -> None:
    """measurements.jsonl + aggregate.json + per-arm CSV tables + traces."""
    import os

    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "measurements.jsonl"), "w", encoding="utf-8") as fh:
        for m in result.measurements:
            fh.write(json.dumps(m.to_dict()) + "\n")
        for s in result.skips:
            fh.write(json.dumps(s.to_dict()) + "\n")
    agg = aggregate(result.measurements) if result.measurements else {}
    report = {
        "aggregate": agg,
        "n_measurements": len(result.measurements),
        "n_skips": len(result.skips),
        "uniqueness": {
            f"{name}/fold{fold}": rep
            for (name, fold), rep in sorted(result.uniqueness.items())
        },
    }
    with open(os.path.join(outdir, "aggregate.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")

    arms_dir = os.path.join(outdir, "arms")
    os.makedirs(arms_dir, exist_ok=True)
    by_arm: dict = {}
    for m in result.measurements:
        by_arm.setdefault((m.generator, m.setting), []).append(m)
    for (gen, setting), group in sorted(by_arm.items()):
        safe = "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in f"{gen}_{setting}")
        with open(os.path.join(arms_dir, f"{safe}.csv"), "w", newline="",
                  encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["fold", "rep", "classifier", *ScoreReport.METRICS])
            for m in group:
                writer.writerow(
                    [m.fold, m.rep, m.classifier]
                    + [getattr(m.score, metric) for metric in ScoreReport.METRICS]
                )
    if result.traces:
        traces_dir = os.path.join(outdir, "traces")
        os.makedirs(traces_dir, exist_ok=True)
        for (name, fold), rows in sorted(result.traces.items()):
            path = os.path.join(traces_dir, f"{name}_fold{fold}.csv")
            if not rows:
                continue
            keys = sorted({k for row in rows for k in row})
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.DictWriter(fh, fieldnames=keys)
                writer.writeheader()
                writer.writerows(rows)
    if result.leaderboards:
        boards = {
            (key if isinstance(key, str) else f"{key[0]}/fold{key[1]}"): value
            for key, value in result.leaderboards.items()
        }
        with open(os.path.join(outdir, "gridsearch.json"), "w", encoding="utf-8") as fh:
            json.dump(boards, fh, indent=2)
            fh.write("\n")


def evaluate_pair(train_ds: LabeledDataset, synth_ds: LabeledDataset,
                  folds_k: int = 5, reps: int = 10, master: int = 0,
                  options: HarnessOptions | None = None, outdir=None) -> dict:
    """One-shot summary for a (train, synthetic) pair.

    Uniqueness and similarity are computed on the pair as given; utility
    runs Setting A with the synthetic rows as a fixed pool, against the
    original baseline.
    """
    from .similarity import similarity_report

    options = options or HarnessOptions()
    report, _ = uniqueness_report(train_ds, synth_ds)
    sim = similarity_report(train_ds.features, synth_ds.features, options.k_sim)
    result = run_utility(
        train_ds,
        {"synthetic": synth_ds},
        settings=("A",),
        folds_k=folds_k,
        reps=reps,
        master=master,
        options=options,
        outdir=None,
    )
    summary = {
        "uniqueness": report.to_dict(),
        "similarity": sim.to_dict(),
        "utility": aggregate(result.measurements),
        "n_skips": len(result.skips),
        "skips": [s.to_dict() for s in result.skips],
    }
    if outdir is not None:
        import os

        os.makedirs(outdir, exist_ok=True)
        with open(os.path.join(outdir, "evaluation.json"), "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
        write_run_outputs(result, outdir)
    return summary
