"""Gradient-norm baseline using a uniform target distribution.

The loss compares the network output against the uniform vector 1/C, so
only one side depends on the input; confident predictions yield large
gradients, uncertain ones small.  Last-layer mode scores with the raw norm
and needs no training; all-layers mode feeds every layer's norm into a
logistic head.
"""

import numpy as np

from ..autodiff import cross_entropy, uniform_target
from ..errors import NotFittedError
from ..gradfeat import GradientFeatures
from ..validation import check_image_batch
from .git import setup_xy
from .heads import LogisticHead

GRADNORM_MODES = ("last", "all")


def gradnorm_features(net, images, batch_size=128):
    """(n, L) matrix of per-layer gradient norms against the uniform target."""
    images = check_image_batch(images)
    num_classes = net.output_shape[0]
    rows = []
    for start in range(0, len(images), batch_size):
        batch = images[start : start + batch_size]
        logits, tape = net.forward(batch, record=True)
        zmax = logits.max(axis=1, keepdims=True)
        e = np.exp(logits - zmax)
        grad = (e / e.sum(axis=1, keepdims=True) - 1.0 / num_classes).astype(logits.dtype)
        rows.append(net.backward(tape, grad, per_sample=True).l1_norms())
    return np.concatenate(rows).astype(np.float64)


def gradnorm_score(net, image, mode="last"):
    """Uniform-target gradient norm for a single image.

    ``last`` returns the last layer's norm as a plain score (large = the
    model is confident); ``all`` returns the full per-layer feature vector.
    """
    if mode not in GRADNORM_MODES:
        raise ValueError(f"mode must be one of {GRADNORM_MODES}, got {mode!r}")
    logits, tape = net.forward(image, record=True)
    _, grad = cross_entropy(logits, uniform_target(net.output_shape[0], n=logits.shape[0]))
    norms = net.backward(tape, grad).l1_norms()
    if mode == "last":
        return float(norms[-1])
    return GradientFeatures(values=norms, stream="gradnorm-uniform")


class GradNormDetector:
    """Harness adapter; scores follow "higher = more likely misclassified".

    Last-layer mode has no trainable part: the raw norm is negated so that
    low-confidence samples score high.  All-layers mode trains a logistic
    head on the per-layer norms.
    """

    def __init__(self, net, mode="last", batch_size=128):
        if mode not in GRADNORM_MODES:
            raise ValueError(f"mode must be one of {GRADNORM_MODES}, got {mode!r}")
        self.net = net
        self.mode = mode
        self.batch_size = batch_size
        self.head_ = None
        self._fitted = mode == "last"

    def get_params(self):
        return {"mode": self.mode, "batch_size": self.batch_size}

    @property
    def is_fitted(self):
        return self._fitted

    def fit(self, train_setup, val_setup=None):
        if self.mode == "last":
            return self
        x_train, y_train = setup_xy(train_setup)
        feats = gradnorm_features(self.net, x_train, batch_size=self.batch_size)
        self.head_ = LogisticHead().fit(feats, y_train)
        self._fitted = True
        return self

    def score_samples(self, images):
        if not self._fitted:
            raise NotFittedError("gradnorm all-layers detector used before fit")
        feats = gradnorm_features(self.net, images, batch_size=self.batch_size)
        if self.mode == "last":
            return -feats[:, -1]
        return self.head_.predict_proba(feats)
