"""Evaluation engine for generative image models.

Computes realism/diversity metrics (Fréchet distance, k-NN precision,
recall, density, coverage) and prompt-consistency aggregates (CLIP
similarity, question-graph scoring, VQA probabilities) from precomputed
embeddings, with mergeable metric states for distributed runs,
group-disaggregated reporting, balanced cross-dataset subsampling, and
figure rendering. The `imeval` command drives everything from files.
"""

from .version import __version__

from .errors import (
    ConflictError,
    ContractError,
    DataError,
    DuplicateResultError,
    EvalError,
    FormatError,
    GraphError,
    InsufficientSamples,
    NumericalError,
    ShapeError,
    SpecError,
    UnsupportedLayout,
)
from .data_model import (
    ALL_GROUP,
    DsgGraph,
    EmbeddingSet,
    ResultRow,
    SampleRecord,
    ScoreTable,
    load_dsg_answers,
    load_embeddings,
    load_metadata,
    load_score_csv,
    read_results,
    write_embeddings,
    write_metadata,
    write_results,
)
from .marginal import (
    DEFAULT_K,
    GaussianMoments,
    ManifoldModel,
    PrdcResult,
    build_manifold,
    compute_prdc,
    fit_gaussian,
    frechet_distance,
    knn_radii,
)
from .consistency import (
    DEFAULT_CLIP_SCALE,
    ClipPair,
    DsgAnswers,
    aggregate_scores,
    clip_score,
    clip_scores,
    dsg_score,
    vqa_scores,
)
from .engine import MetricSpec, MetricState, compute, merge, new_state, update_generated, update_real
from .datasets import (
    BalanceReport,
    DatasetHandle,
    SubsampleAssignment,
    balanced_subsample,
    sample_without_replacement,
    validate_balance,
)
from .analysis import (
    ParetoPoint,
    RankTable,
    pareto_front,
    radar_data,
    rank_table,
    scatter_data,
)
from .exercises import ExerciseConfig, load_config, run_exercise

__all__ = [
    "__version__",
    "ALL_GROUP",
    "BalanceReport",
    "ClipPair",
    "ConflictError",
    "ContractError",
    "DEFAULT_CLIP_SCALE",
    "DEFAULT_K",
    "DataError",
    "DatasetHandle",
    "DsgAnswers",
    "DsgGraph",
    "DuplicateResultError",
    "EmbeddingSet",
    "EvalError",
    "ExerciseConfig",
    "FormatError",
    "GaussianMoments",
    "GraphError",
    "InsufficientSamples",
    "ManifoldModel",
    "MetricSpec",
    "MetricState",
    "NumericalError",
    "ParetoPoint",
    "PrdcResult",
    "RankTable",
    "ResultRow",
    "SampleRecord",
    "ScoreTable",
    "ShapeError",
    "SpecError",
    "SubsampleAssignment",
    "UnsupportedLayout",
    "aggregate_scores",
    "balanced_subsample",
    "build_manifold",
    "clip_score",
    "clip_scores",
    "compute",
    "compute_prdc",
    "dsg_score",
    "fit_gaussian",
    "frechet_distance",
    "knn_radii",
    "load_config",
    "load_dsg_answers",
    "load_embeddings",
    "load_metadata",
    "load_score_csv",
    "merge",
    "new_state",
    "pareto_front",
    "radar_data",
    "rank_table",
    "read_results",
    "run_exercise",
    "sample_without_replacement",
    "scatter_data",
    "update_generated",
    "update_real",
    "validate_balance",
    "vqa_scores",
    "write_embeddings",
    "write_metadata",
    "write_results",
]
