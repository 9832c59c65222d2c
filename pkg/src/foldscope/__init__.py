"""Folding analysis for piecewise-activation networks.

Quantifies how a feed-forward net folds its input space: activation
patterns along a segment, a scale-free folding value per path, dataset
level aggregation, and a trainer that can penalize flat nets.
"""

from .folding import (
    DisconnectedPathsError,
    FoldingReport,
    SingularPathError,
    chi,
    concat,
    fold_report,
    interaction,
    r1,
    r2,
    reverse,
    smooth_chi,
    smooth_r1,
)
from .globalfold import (
    ClassPairStats,
    GlobalFoldingReport,
    LabeledDataset,
    MannWhitneyResult,
    chi_plus,
    global_phi,
    load_dataset_csv,
    mann_whitney_u,
    pairwise_chi,
    save_dataset_csv,
)
from .network import (
    ActivationKind,
    ActivationPattern,
    Layer,
    Mlp,
    ModelFormatError,
    activation_pattern,
    apply_activation,
    forward,
    hamming,
    load_model,
    save_model,
)
from .sampler import (
    DEFAULT_DELTA_INIT,
    DEFAULT_DELTA_MIN,
    PathSample,
    SamplerStats,
    dedup_consecutive,
    path_from_strings,
    sample_adaptive,
    sample_equidistant,
)
from .training import (
    DatasetSpec,
    PenaltyConfig,
    TrainConfig,
    TrainHistory,
    TrainingDivergedError,
    init_network,
    make_dataset,
    penalty_value_and_grad,
    soft_hamming,
    soft_pattern,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "ActivationKind",
    "ActivationPattern",
    "ClassPairStats",
    "DEFAULT_DELTA_INIT",
    "DEFAULT_DELTA_MIN",
    "DatasetSpec",
    "DisconnectedPathsError",
    "FoldingReport",
    "GlobalFoldingReport",
    "LabeledDataset",
    "Layer",
    "MannWhitneyResult",
    "Mlp",
    "ModelFormatError",
    "PathSample",
    "PenaltyConfig",
    "SamplerStats",
    "SingularPathError",
    "TrainConfig",
    "TrainHistory",
    "TrainingDivergedError",
    "activation_pattern",
    "apply_activation",
    "chi",
    "chi_plus",
    "concat",
    "dedup_consecutive",
    "fold_report",
    "forward",
    "global_phi",
    "hamming",
    "init_network",
    "interaction",
    "load_dataset_csv",
    "load_model",
    "make_dataset",
    "mann_whitney_u",
    "pairwise_chi",
    "path_from_strings",
    "penalty_value_and_grad",
    "r1",
    "r2",
    "reverse",
    "sample_adaptive",
    "sample_equidistant",
    "save_dataset_csv",
    "save_model",
    "smooth_chi",
    "smooth_r1",
    "soft_hamming",
    "soft_pattern",
    "train",
]
