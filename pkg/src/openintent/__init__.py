"""Open intent detection: distance-aware representations, adaptive decision
boundaries, open-world evaluation."""

from .boundary import (
    AdamOptimizer,
    BoundarySet,
    BoundaryTrainConfig,
    boundary_gradient,
    boundary_loss,
    fit_boundaries,
    init_boundaries,
    inverse_softplus,
    softplus,
)
from .datasets import (
    DEFAULT_OPEN_LABEL,
    CorpusParseError,
    LabelSpace,
    OpenWorldSplit,
    Utterance,
    load_corpus,
    make_open_world_split,
    select_known_classes,
)
from .detector import OpenIntentDetector
from .encoder import (
    EmbeddingFormatError,
    EncoderParams,
    featurize,
    forward_head,
    load_embeddings,
    save_embeddings,
)
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    run_experiment,
    run_labeled_ratio_study,
    run_radius_ablation,
)
from .inference import (
    Prediction,
    classify,
    classify_batch,
    classify_msp,
    classify_msp_batch,
    scale_radii,
)
from .metrics import MetricsReport, aggregate_runs, evaluate
from .model_io import ModelFormatError, load_model, save_model
from .representation import (
    Centroids,
    CosineClassifier,
    DivergenceError,
    GradientCheckConfig,
    LinearClassifier,
    RepTrainConfig,
    compute_centroids,
    distance_coefficient,
    gamma_coefficients,
    gradient_check,
    logits,
    nearest_two,
    softmax_loss,
    squash,
    train_representation,
)
from .synthetic import SyntheticConfig, make_synthetic_data

__version__ = "0.1.0"

__all__ = [
    "AdamOptimizer",
    "BoundarySet",
    "BoundaryTrainConfig",
    "Centroids",
    "CorpusParseError",
    "CosineClassifier",
    "DEFAULT_OPEN_LABEL",
    "DivergenceError",
    "EmbeddingFormatError",
    "EncoderParams",
    "ExperimentConfig",
    "ExperimentResult",
    "GradientCheckConfig",
    "LabelSpace",
    "LinearClassifier",
    "MetricsReport",
    "ModelFormatError",
    "OpenIntentDetector",
    "OpenWorldSplit",
    "Prediction",
    "RepTrainConfig",
    "SyntheticConfig",
    "Utterance",
    "aggregate_runs",
    "boundary_gradient",
    "boundary_loss",
    "classify",
    "classify_batch",
    "classify_msp",
    "classify_msp_batch",
    "compute_centroids",
    "distance_coefficient",
    "evaluate",
    "featurize",
    "fit_boundaries",
    "forward_head",
    "gamma_coefficients",
    "gradient_check",
    "init_boundaries",
    "inverse_softplus",
    "load_corpus",
    "load_embeddings",
    "load_model",
    "logits",
    "make_open_world_split",
    "make_synthetic_data",
    "nearest_two",
    "run_experiment",
    "run_labeled_ratio_study",
    "run_radius_ablation",
    "save_embeddings",
    "save_model",
    "scale_radii",
    "select_known_classes",
    "softmax_loss",
    "softplus",
    "squash",
    "train_representation",
]
