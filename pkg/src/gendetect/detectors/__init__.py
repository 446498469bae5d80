from .artifact import load_detector, save_detector
from .git import (
    DEFAULT_GIT_STREAMS,
    GitDetector,
    GranDetector,
    MultiStreamDetector,
    setup_xy,
)
from .gradnorm import GradNormDetector, gradnorm_features, gradnorm_score
from .heads import LogisticHead
from .mahalanobis import (
    MahalanobisDetector,
    layer_feature_vectors,
    mahalanobis_fit,
    mahalanobis_layer_scores,
)
from .odin import input_shift_direction, odin_input_shift

__all__ = [
    "DEFAULT_GIT_STREAMS",
    "GitDetector",
    "GradNormDetector",
    "GranDetector",
    "LogisticHead",
    "MahalanobisDetector",
    "MultiStreamDetector",
    "gradnorm_features",
    "gradnorm_score",
    "input_shift_direction",
    "layer_feature_vectors",
    "load_detector",
    "mahalanobis_fit",
    "mahalanobis_layer_scores",
    "odin_input_shift",
    "save_detector",
    "setup_xy",
]
