"""synthbench: generators and evaluation metrics for binary tabular data.

Train desk-scale generative models (Bernoulli baseline, noisy-copy
control, VAE, DPGAN, CTGAN-lite) on binary labeled datasets and score
any synthetic dataset against an original one along three axes:
uniqueness (exact-copy decomposition), similarity (manifold precision,
recall, density, coverage in Hamming space) and utility (downstream
classification under synthetic-only and balance-augmented training).
"""

__version__ = "0.1.0"

from .classifiers import ScoreReport, auc_roc, predict_scores, score_report, train
from .dataset import (
    DataFormatError,
    FoldPlan,
    LabeledDataset,
    PoolShortfallError,
    balance,
    clean,
    load_csv,
    sample_matched,
    save_csv,
    stratified_kfold,
)
from .generators import (
    GeneratorModel,
    GeneratorSpec,
    grid_search,
    sample,
    train_baseline,
    train_ctgan,
    train_dpgan,
    train_generator,
    train_vae,
)
from .harness import (
    HarnessOptions,
    PcaEmbedding,
    UtilityMeasurement,
    aggregate,
    evaluate_pair,
    export_heatmap,
    pca_2d,
    run_setting_a,
    run_setting_b,
    run_utility,
)
from .similarity import (
    KnnRadii,
    SimilarityReport,
    coverage,
    density,
    knn_radii,
    precision,
    recall,
    similarity_report,
)
from .toydata import make_two_cluster, two_cluster_dataset
from .uniqueness import UniquenessReport, authenticity, uniqueness_report

__all__ = [
    "DataFormatError",
    "FoldPlan",
    "GeneratorModel",
    "GeneratorSpec",
    "HarnessOptions",
    "KnnRadii",
    "LabeledDataset",
    "PcaEmbedding",
    "PoolShortfallError",
    "ScoreReport",
    "SimilarityReport",
    "UniquenessReport",
    "UtilityMeasurement",
    "aggregate",
    "auc_roc",
    "authenticity",
    "balance",
    "clean",
    "coverage",
    "density",
    "evaluate_pair",
    "export_heatmap",
    "grid_search",
    "knn_radii",
    "load_csv",
    "make_two_cluster",
    "pca_2d",
    "precision",
    "predict_scores",
    "recall",
    "run_setting_a",
    "run_setting_b",
    "run_utility",
    "sample",
    "sample_matched",
    "save_csv",
    "score_report",
    "similarity_report",
    "stratified_kfold",
    "train",
    "train_baseline",
    "train_ctgan",
    "train_dpgan",
    "train_generator",
    "train_vae",
    "two_cluster_dataset",
    "uniqueness_report",
]
