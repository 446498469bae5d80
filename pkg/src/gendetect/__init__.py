"""gendetect: decide when an image classifier's prediction should not be trusted.

The main detector runs the input through several invariance transformations
(identity, Gaussian blur, Wiener and median filters, an autoencoder),
extracts per-layer gradient norms measuring how much the network's weights
contradict the original prediction, and fuses per-stream logistic heads into
one misclassification probability.  Distance- and gradient-norm baselines,
a perturbation foundry (sensor noise, white-box attacks, OOD mixtures) and
an evaluation harness round out the toolkit.
"""

from .autodiff import NetworkGraph
from .data import DatasetContainer, SyntheticSpec, generate_synthetic, load_dataset, save_dataset
from .detectors import (
    GitDetector,
    GradNormDetector,
    GranDetector,
    LogisticHead,
    MahalanobisDetector,
    MultiStreamDetector,
    load_detector,
    save_detector,
)
from .evaluation import (
    EvalReport,
    ExperimentConfig,
    auroc,
    emit_report,
    run_experiment,
    split_dataset,
    tnr_at_tpr,
)
from .gradfeat import GradientFeatures, extract_all_streams, extract_gradient_features
from .models import (
    AutoencoderConfig,
    ClassifierConfig,
    load_checkpoint,
    predict,
    save_checkpoint,
    train_autoencoder,
    train_classifier,
)
from .perturb import PerturbationSetup, build_adv_setup, build_ood_setup, build_punc_setup
from .transforms import (
    AutoencoderTransform,
    GaussianTransform,
    IdentityTransform,
    MedianTransform,
    WienerTransform,
)

__version__ = "0.1.0"

__all__ = [
    "AutoencoderConfig",
    "AutoencoderTransform",
    "ClassifierConfig",
    "DatasetContainer",
    "EvalReport",
    "ExperimentConfig",
    "GaussianTransform",
    "GitDetector",
    "GradNormDetector",
    "GradientFeatures",
    "GranDetector",
    "IdentityTransform",
    "LogisticHead",
    "MahalanobisDetector",
    "MedianTransform",
    "MultiStreamDetector",
    "NetworkGraph",
    "PerturbationSetup",
    "SyntheticSpec",
    "WienerTransform",
    "auroc",
    "build_adv_setup",
    "build_ood_setup",
    "build_punc_setup",
    "emit_report",
    "extract_all_streams",
    "extract_gradient_features",
    "generate_synthetic",
    "load_checkpoint",
    "load_dataset",
    "load_detector",
    "predict",
    "run_experiment",
    "save_checkpoint",
    "save_dataset",
    "save_detector",
    "split_dataset",
    "tnr_at_tpr",
    "train_autoencoder",
    "train_classifier",
]
