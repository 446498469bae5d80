"""Network architecture presets."""

import numpy as np

from ..autodiff import (
    Conv2d,
    ConvTranspose2d,
    Dense,
    Flatten,
    MaxPool2d,
    NetworkGraph,
    ReLU,
    Sigmoid,
)
from ..errors import ShapeError


def _smallcnn_v1(input_shape, num_classes):
    c, h, w = input_shape
    if h % 4 or w % 4:
        raise ShapeError(f"smallcnn-v1 needs H,W divisible by 4, got {h}x{w}")
    return [
        Conv2d(c, 8, 3, stride=1, padding=1),
        ReLU(),
        MaxPool2d(2),
        Conv2d(8, 16, 3, stride=1, padding=1),
        ReLU(),
        MaxPool2d(2),
        Flatten(),
        Dense(16 * (h // 4) * (w // 4), num_classes),
    ]


def _linear_v1(input_shape, num_classes):
    return [Flatten(), Dense(int(np.prod(input_shape)), num_classes)]


PRESETS = {
    "smallcnn-v1": _smallcnn_v1,
    "linear-v1": _linear_v1,
}


def build_classifier(preset, input_shape, num_classes, rng=None, dtype=np.float32):
    """Resolve a preset id into an initialized classifier network (raw logits out)."""
    if num_classes < 2:
        raise ValueError(f"class count must be at least 2, got {num_classes}")
    if preset not in PRESETS:
        raise ValueError(f"unknown classifier preset: {preset!r} (have {sorted(PRESETS)})")
    layers = PRESETS[preset](tuple(input_shape), num_classes)
    return NetworkGraph(input_shape, layers, dtype=dtype, rng=rng)


def build_autoencoder(input_shape, rng=None, dtype=np.float32):
    """Three stride-2 conv stages down, three transposed-conv stages back up.

    Channel progression 3-12-24-48, all 4x4 kernels with stride 2 and
    padding 1, ReLU between stages and a final sigmoid.
    """
    c, h, w = input_shape
    if c != 3:
        raise ShapeError(f"autoencoder expects 3-channel images, got {c}")
    if h % 8 or w % 8:
        raise ShapeError(f"autoencoder needs H,W divisible by 8, got {h}x{w}")
    layers = [
        Conv2d(3, 12, 4, stride=2, padding=1),
        ReLU(),
        Conv2d(12, 24, 4, stride=2, padding=1),
        ReLU(),
        Conv2d(24, 48, 4, stride=2, padding=1),
        ReLU(),
        ConvTranspose2d(48, 24, 4, stride=2, padding=1),
        ReLU(),
        ConvTranspose2d(24, 12, 4, stride=2, padding=1),
        ReLU(),
        ConvTranspose2d(12, 3, 4, stride=2, padding=1),
        Sigmoid(),
    ]
    return NetworkGraph(input_shape, layers, dtype=dtype, rng=rng)
