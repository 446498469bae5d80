from .checkpoint import load_checkpoint, save_checkpoint
from .presets import PRESETS, build_autoencoder, build_classifier
from .train import (
    Adam,
    AutoencoderConfig,
    ClassifierConfig,
    SGDMomentum,
    TrainingReport,
    accuracy,
    predict,
    train_autoencoder,
    train_classifier,
)

__all__ = [
    "Adam",
    "AutoencoderConfig",
    "ClassifierConfig",
    "PRESETS",
    "SGDMomentum",
    "TrainingReport",
    "accuracy",
    "build_autoencoder",
    "build_classifier",
    "load_checkpoint",
    "predict",
    "save_checkpoint",
    "train_autoencoder",
    "train_classifier",
]
