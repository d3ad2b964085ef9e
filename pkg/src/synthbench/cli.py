"""Command-line interface.

Subcommands mirror the library surface: similarity, uniqueness,
generate, gridsearch, utility, analyze, evaluate. Generator
hyperparameters come from flags or from INI config files with one
section per generator spec.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import sys

from . import __version__
from .dataset import LabeledDataset, clean, load_csv, save_csv
from .generators import (
    GeneratorSpec,
    grid_search,
    sample,
    trace_rows,
    train_generator,
)
from .harness import (
    HarnessOptions,
    evaluate_pair,
    export_heatmap,
    pca_2d,
    run_utility,
)
from .similarity import similarity_report
from .uniqueness import uniqueness_report

_SPEC_FIELDS = {
    "kind": str,
    "hidden": int,
    "latent": int,
    "lr": float,
    "epochs": int,
    "batch": int,
    "sigma": float,
    "clip": float,
    "flip_prob": float,
    "cond_weight": float,
    "seed": int,
}


def _spec_from_mapping(mapping, where: str) -> GeneratorSpec:
    kwargs = {}
    for key, raw in mapping.items():
        key = key.strip().lower()
        if key not in _SPEC_FIELDS:
            raise ValueError(f"{where}: unknown generator option {key!r}")
        kwargs[key] = _SPEC_FIELDS[key](raw)
    if "kind" not in kwargs:
        raise ValueError(f"{where}: missing required option 'kind'")
    return GeneratorSpec(**kwargs)


def read_spec_config(path) -> dict[str, GeneratorSpec]:
    """INI file, one section per generator spec; section name = arm name."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ValueError(f"cannot read config file {path}")
    specs = {}
    for section in parser.sections():
        specs[section] = _spec_from_mapping(parser[section], f"{path} [{section}]")
    if not specs:
        raise ValueError(f"{path}: no generator sections")
    return specs


def _load(path, label_column: str, do_clean: bool) -> LabeledDataset:
    ds = load_csv(path, label_column)
    return clean(ds) if do_clean else ds


def _write_json(payload, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _cmd_similarity(args) -> int:
    real = _load(args.real, args.label_column, do_clean=False)
    synth = _load(args.synthetic, args.label_column, do_clean=False)
    report = similarity_report(real.features, synth.features, args.k)
    _write_json(report.to_dict(), args.out)
    print(f"similarity sum={report.sum:.4f} -> {args.out}")
    return 0


def _cmd_uniqueness(args) -> int:
    train = _load(args.train, args.label_column, do_clean=False)
    generated = _load(args.generated, args.label_column, do_clean=False)
    report, idx = uniqueness_report(train, generated)
    _write_json(report.to_dict(), args.out)
    if args.unique_novel_out:
        save_csv(generated.subset(idx), args.unique_novel_out)
    print(
        f"copies={report.copies_of_training}/{report.generated_total} "
        f"unique_novel={report.unique_novel_count} -> {args.out}"
    )
    return 0


def _spec_from_args(args) -> GeneratorSpec:
    if args.config:
        specs = read_spec_config(args.config)
        section = args.section or next(iter(specs))
        if section not in specs:
            raise ValueError(f"{args.config}: no section {section!r}")
        return specs[section]
    if not args.kind:
        raise ValueError("either --kind or --config is required")
    kwargs = {"kind": args.kind, "seed": args.seed}
    for name in ("hidden", "latent", "lr", "epochs", "batch", "sigma", "clip",
                 "flip_prob", "cond_weight"):
        value = getattr(args, name)
        if value is not None:
            kwargs[name] = value
    return GeneratorSpec(**kwargs)


def _cmd_generate(args) -> int:
    train = _load(args.train, args.label_column, do_clean=not args.no_clean)
    spec = _spec_from_args(args)
    model = train_generator(train, spec)
    synth = sample(model, args.n, args.seed, label_mode=args.label_mode,
                   threshold=args.threshold)
    save_csv(synth, args.out)
    if args.loss_trace_out:
        rows = trace_rows(model)
        keys = sorted({k for row in rows for k in row})
        with open(args.loss_trace_out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=keys)
            writer.writeheader()
            writer.writerows(rows)
    print(f"{spec.kind}: wrote {synth.row_count} rows -> {args.out}")
    return 0


def _cmd_gridsearch(args) -> int:
    train = _load(args.train, args.label_column, do_clean=not args.no_clean)
    grid = list(read_spec_config(args.grid).values())
    best, leaderboard = grid_search(train, grid, k_sim=args.k, seed=args.seed,
                                    n_pool=args.n_pool)
    _write_json({"best": best.to_dict(), "leaderboard": leaderboard}, args.out)
    print(f"best spec: {best.kind} (grid index {leaderboard[0]['index']}) -> {args.out}")
    return 0


def _cmd_utility(args) -> int:
    original = _load(args.original, args.label_column, do_clean=not args.no_clean)
    generators: dict = dict(read_spec_config(args.generators)) if args.generators else {}
    for name, path in args.grid or []:
        generators[name] = list(read_spec_config(path).values())
    if not generators:
        raise ValueError("no generators: pass --generators and/or --grid")
    options = HarnessOptions(
        classifiers=tuple(args.classifiers.split(",")),
        n_generate=args.n_generate,
        unique_only=not args.no_unique_only,
        label_mode=args.label_mode,
        grid_mode=args.grid_mode,
        k_sim=args.k,
    )
    settings = ("A", "B") if args.setting == "both" else (args.setting,)
    result = run_utility(
        original,
        generators,
        settings=settings,
        folds_k=args.folds,
        reps=args.reps,
        master=args.seed,
        options=options,
        outdir=args.outdir,
    )
    print(
        f"{len(result.measurements)} measurements, {len(result.skips)} skips "
        f"-> {args.outdir}"
    )
    return 0


def _cmd_analyze(args) -> int:
    os.makedirs(args.outdir, exist_ok=True)
    for path in args.data:
        ds = _load(path, args.label_column, do_clean=False)
        stem = os.path.splitext(os.path.basename(path))[0]
        embedding = pca_2d(ds.features)
        pca_path = os.path.join(args.outdir, f"{stem}_pca.csv")
        with open(pca_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["pc1", "pc2", ds.label_name])
            for (a, b), label in zip(embedding.projections, ds.labels):
                writer.writerow([a, b, int(label)])
        counts = ds.class_counts()
        if counts[0] == counts[1]:
            export_heatmap(ds, os.path.join(args.outdir, f"{stem}_heatmap.csv"))
        else:
            print(
                f"{path}: classes {counts[0]}/{counts[1]} not balanced, "
                "skipping heatmap",
                file=sys.stderr,
            )
        print(f"{path}: pca -> {pca_path}")
    return 0


def _cmd_evaluate(args) -> int:
    train = _load(args.train, args.label_column, do_clean=not args.no_clean)
    synth = _load(args.synthetic, args.label_column, do_clean=False)
    options = HarnessOptions(
        classifiers=tuple(args.classifiers.split(",")),
        unique_only=not args.no_unique_only,
        k_sim=args.k,
    )
    summary = evaluate_pair(
        train, synth, folds_k=args.folds, reps=args.reps, master=args.seed,
        options=options, outdir=args.outdir,
    )
    print(
        f"copy_fraction={summary['uniqueness']['copy_fraction']:.3f} "
        f"similarity_sum={summary['similarity']['sum']:.3f} -> {args.outdir}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synthbench",
        description="Train binary-tabular generators and evaluate synthetic data "
                    "on uniqueness, similarity and utility.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, label=True):
        if label:
            p.add_argument("--label-column", default="label",
                           help="name of the 0/1 outcome column (default: label)")

    p = sub.add_parser("similarity", help="precision/recall/density/coverage")
    p.add_argument("--real", required=True)
    p.add_argument("--synthetic", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=_cmd_similarity)

    p = sub.add_parser("uniqueness", help="copy/novel/unique decomposition")
    p.add_argument("--train", required=True)
    p.add_argument("--generated", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--unique-novel-out", help="also dump the unique novel rows")
    common(p)
    p.set_defaults(func=_cmd_uniqueness)

    p = sub.add_parser("generate", help="train one generator and sample rows")
    p.add_argument("--train", required=True)
    p.add_argument("--kind", choices=("bernoulli", "noisy_copy", "vae", "dpgan", "ctgan"))
    p.add_argument("--config", help="INI file with generator sections")
    p.add_argument("--section", help="section of --config to use")
    for name, kind in (("hidden", int), ("latent", int), ("epochs", int),
                       ("batch", int)):
        p.add_argument(f"--{name}", type=kind)
    for name in ("lr", "sigma", "clip", "flip-prob", "cond-weight"):
        p.add_argument(f"--{name}", dest=name.replace("-", "_"), type=float)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--label-mode", choices=("conditional", "unconditional"),
                   default="conditional")
    p.add_argument("--threshold", action="store_true",
                   help="round probabilities at 0.5 instead of Bernoulli draws")
    p.add_argument("--no-clean", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--loss-trace-out")
    common(p)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("gridsearch", help="rank specs by similarity-metric sum")
    p.add_argument("--train", required=True)
    p.add_argument("--grid", required=True, help="INI file, one spec per section")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-pool", type=int)
    p.add_argument("--no-clean", action="store_true")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=_cmd_gridsearch)

    p = sub.add_parser("utility", help="Settings A/B over stratified folds")
    p.add_argument("--original", required=True)
    p.add_argument("--generators", help="INI file of generator arms")
    p.add_argument("--grid", nargs=2, action="append", metavar=("NAME", "FILE"),
                   help="add arm NAME resolved by grid search over FILE's sections")
    p.add_argument("--grid-mode", choices=("per_fold", "global"), default="per_fold")
    p.add_argument("--setting", choices=("A", "B", "both"), default="both")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-generate", type=int, default=100_000)
    p.add_argument("--classifiers", default=",".join(("logreg", "nbayes", "knn",
                                                      "rforest", "svm")))
    p.add_argument("--label-mode", choices=("conditional", "unconditional"),
                   default="conditional")
    p.add_argument("--no-unique-only", action="store_true",
                   help="sample from raw generated rows (ablation)")
    p.add_argument("--k", type=int, default=5, help="k for grid-search similarity")
    p.add_argument("--no-clean", action="store_true")
    p.add_argument("--outdir", required=True)
    common(p)
    p.set_defaults(func=_cmd_utility)

    p = sub.add_parser("analyze", help="PCA embedding and heatmap matrix export")
    p.add_argument("--data", nargs="+", required=True)
    p.add_argument("--outdir", required=True)
    common(p)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("evaluate", help="one-shot uniqueness+similarity+utility")
    p.add_argument("--train", required=True)
    p.add_argument("--synthetic", required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--classifiers", default=",".join(("logreg", "nbayes", "knn",
                                                      "rforest", "svm")))
    p.add_argument("--no-unique-only", action="store_true")
    p.add_argument("--no-clean", action="store_true")
    p.add_argument("--outdir", required=True)
    common(p)
    p.set_defaults(func=_cmd_evaluate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"synthbench: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
