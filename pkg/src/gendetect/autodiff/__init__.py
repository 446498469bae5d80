from .layers import (
    Conv2d,
    ConvTranspose2d,
    Dense,
    Flatten,
    Layer,
    MaxPool2d,
    ReLU,
    Sigmoid,
    Softmax,
    layer_from_spec,
)
from .losses import binary_cross_entropy, cross_entropy, onehot, softmax, uniform_target
from .network import GradientSet, NetworkGraph, Tape

__all__ = [
    "Conv2d",
    "ConvTranspose2d",
    "Dense",
    "Flatten",
    "GradientSet",
    "Layer",
    "MaxPool2d",
    "NetworkGraph",
    "ReLU",
    "Sigmoid",
    "Softmax",
    "Tape",
    "binary_cross_entropy",
    "cross_entropy",
    "layer_from_spec",
    "onehot",
    "softmax",
    "uniform_target",
]
