"""Per-class coreset selection over embedding pools.

The package picks a small, fixed budget of items per class out of a labeled
embedding pool so that simple classifiers trained on the picks track the
full pool as closely as possible. Selection strategies range from uniform
sampling to a training-free cluster-condense-and-represent pipeline and
direct optimization of diversity/representativeness objectives, all fully
deterministic given a master seed.
"""

from .birch import (
    CFTree,
    ClusteringFeature,
    GlobalClustering,
    LeafEntry,
    cf_from_point,
    cf_merge,
    global_cluster,
    weighted_kmeans,
)
from .dataset import EmbeddingSet
from .datagen import BenchmarkSpec, gen_benchmark
from .evaluate import (
    CentroidModel,
    ExperimentResult,
    accuracy,
    evaluate_selection,
    fit_centroids,
    macro_auc_ovr,
    macro_f1,
    predict_scores,
    run_experiment,
)
from .fileio import (
    BadMagicError,
    ChecksumError,
    EmbeddingFileError,
    LabelRangeError,
    NonFiniteValueError,
    ScoreFileError,
    TruncatedFileError,
    UnsupportedVersionError,
    read_embeddings,
    read_scores,
    write_embeddings,
    write_scores,
)
from .linalg import (
    PcaModel,
    RngStream,
    cosine_similarity,
    derive_stream,
    jacobi_eigh,
    l2_distance,
    pca_fit,
    pca_transform,
)
from .objectives import (
    ObjectiveWeights,
    combined_objective,
    diversity_loss,
    median_heuristic,
    mmd2_unbiased,
    representativeness_loss,
)
from .selection import (
    METHODS,
    SelectionConfig,
    SelectionResult,
    distill,
    select_greedy_objective,
    select_kmeans_mmd,
    select_knapsack,
    select_random,
    select_tacdt,
    select_top_score,
    weights_for_vpc,
)

__version__ = "0.1.0"

__all__ = [
    "BadMagicError",
    "BenchmarkSpec",
    "CentroidModel",
    "CFTree",
    "ChecksumError",
    "ClusteringFeature",
    "EmbeddingFileError",
    "EmbeddingSet",
    "ExperimentResult",
    "GlobalClustering",
    "LabelRangeError",
    "LeafEntry",
    "METHODS",
    "NonFiniteValueError",
    "ObjectiveWeights",
    "PcaModel",
    "RngStream",
    "ScoreFileError",
    "SelectionConfig",
    "SelectionResult",
    "TruncatedFileError",
    "UnsupportedVersionError",
    "accuracy",
    "cf_from_point",
    "cf_merge",
    "combined_objective",
    "cosine_similarity",
    "derive_stream",
    "distill",
    "diversity_loss",
    "evaluate_selection",
    "fit_centroids",
    "gen_benchmark",
    "global_cluster",
    "jacobi_eigh",
    "l2_distance",
    "macro_auc_ovr",
    "macro_f1",
    "median_heuristic",
    "mmd2_unbiased",
    "pca_fit",
    "pca_transform",
    "predict_scores",
    "read_embeddings",
    "read_scores",
    "representativeness_loss",
    "run_experiment",
    "select_greedy_objective",
    "select_kmeans_mmd",
    "select_knapsack",
    "select_random",
    "select_tacdt",
    "select_top_score",
    "weighted_kmeans",
    "weights_for_vpc",
    "write_embeddings",
    "write_scores",
]
