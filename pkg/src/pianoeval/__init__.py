"""Perceptual evaluation toolkit for piano transcription resynthesis."""

__version__ = "0.1.0"

from .smf import Note, Performance, Pianoroll, build_pianoroll, parse_smf, trim_and_window
from .matching import Matching, ObjScore, ToleranceConfig, match_notes, obj_measure
from .features import (
    FEATURE_NAMES,
    FeatureVector,
    StandardizationParams,
    extract_features,
    fit_standardization,
    standardize,
)
from .measure import (
    MeasureInput,
    PerceptualModel,
    TrainingConfig,
    fit_elasticnet,
    loo_evaluate,
    make_input,
    predict,
    prune_refit,
)
from .dispersion import (
    SelectionConfig,
    SelectionResult,
    exact_pdispersion,
    farthest_pair,
    min_pairwise_distance,
    select_dispersed,
    selection_pipeline,
    ward_cluster,
)
from .align import AlignConfig, WarpPath, dtw_exact, fastdtw, remap_performance
from .analysis import (
    BootstrapConfig,
    RatingsTable,
    aggregate_ratings,
    bootstrap_margin,
    correlation,
    load_and_filter_ratings,
)

__all__ = [
    "__version__",
    "Note",
    "Performance",
    "Pianoroll",
    "parse_smf",
    "build_pianoroll",
    "trim_and_window",
    "ToleranceConfig",
    "Matching",
    "ObjScore",
    "match_notes",
    "obj_measure",
    "FEATURE_NAMES",
    "FeatureVector",
    "StandardizationParams",
    "extract_features",
    "fit_standardization",
    "standardize",
    "MeasureInput",
    "PerceptualModel",
    "TrainingConfig",
    "make_input",
    "predict",
    "fit_elasticnet",
    "prune_refit",
    "loo_evaluate",
    "SelectionConfig",
    "SelectionResult",
    "ward_cluster",
    "select_dispersed",
    "exact_pdispersion",
    "min_pairwise_distance",
    "farthest_pair",
    "selection_pipeline",
    "AlignConfig",
    "WarpPath",
    "dtw_exact",
    "fastdtw",
    "remap_performance",
    "RatingsTable",
    "BootstrapConfig",
    "load_and_filter_ratings",
    "aggregate_ratings",
    "bootstrap_margin",
    "correlation",
]
