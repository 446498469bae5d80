"""Multistream gradient-feature detectors.

A stream is one invariance transform plus a logistic head over its gradient
features.  ``fit`` grid-searches each stream's hyperparameter on validation
AUROC, then trains a fusion head on the per-stream probabilities of the
training split.  The full detector with an identity stream plus the four
transform streams is the main method; the single-gaussian-stream variant
(no identity) reproduces the smoothing-based baseline by construction.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import NotFittedError
from ..evaluation.metrics import auroc
from ..gradfeat import feature_matrix, predict_classes
from ..transforms import stream_candidates
from ..validation import check_binary_labels, check_image_batch
from .heads import LogisticHead

log = logging.getLogger("gendetect")

DEFAULT_GIT_STREAMS = ("gaussian", "wiener", "median", "autoencoder")


def setup_xy(setup):
    """Accept a PerturbationSetup or an (images, labels) pair."""
    if hasattr(setup, "images"):
        images, labels = setup.images, setup.labels
    else:
        images, labels = setup
    images = check_image_batch(images)
    labels = check_binary_labels(labels, n=len(images))
    return images, labels


@dataclass
class StreamSearchResult:
    kind: str
    label: str
    val_auroc: float


class MultiStreamDetector:
    """Shared machinery: any list of stream kinds, heads and a fusion head."""

    def __init__(self, net, stream_kinds, autoencoder=None, scale_by_param_count=False, batch_size=128):
        self.net = net
        self.stream_kinds = tuple(stream_kinds)
        if not self.stream_kinds:
            raise ValueError("at least one stream kind is required")
        self.autoencoder = autoencoder
        self.scale_by_param_count = scale_by_param_count
        self.batch_size = batch_size
        self.streams_ = None
        self.heads_ = None
        self.fusion_ = None
        self.search_ = None

    def get_params(self):
        return {
            "stream_kinds": self.stream_kinds,
            "scale_by_param_count": self.scale_by_param_count,
            "batch_size": self.batch_size,
        }

    @property
    def is_fitted(self):
        return self.fusion_ is not None

    def _features(self, images, transform, classes=None):
        return feature_matrix(
            self.net,
            images,
            transform,
            classes=classes,
            batch_size=self.batch_size,
            scale_by_param_count=self.scale_by_param_count,
        )

    def fit(self, train_setup, val_setup):
        """Grid-search stream hyperparameters on validation AUROC, then
        train the fusion head on training-split stream probabilities."""
        x_train, y_train = setup_xy(train_setup)
        x_val, y_val = setup_xy(val_setup)
        pred_train = predict_classes(self.net, x_train, batch_size=self.batch_size)
        pred_val = predict_classes(self.net, x_val, batch_size=self.batch_size)

        self.streams_, self.heads_, self.search_ = [], [], []
        train_probs = []
        for kind in self.stream_kinds:
            best = None
            for cand in stream_candidates(kind, self.autoencoder):
                feats_train = self._features(x_train, cand, pred_train)
                feats_val = self._features(x_val, cand, pred_val)
                head = LogisticHead().fit(feats_train, y_train)
                score = auroc(head.predict_proba(feats_val), y_val)
                log.debug("stream %-24s val auroc %.4f", cand.label, score)
                if best is None or score > best[0]:
                    best = (score, cand, head, feats_train)
            score, cand, head, feats_train = best
            self.streams_.append(cand)
            self.heads_.append(head)
            self.search_.append(StreamSearchResult(kind=kind, label=cand.label, val_auroc=score))
            train_probs.append(head.predict_proba(feats_train))
        fusion_inputs = np.column_stack(train_probs)
        self.fusion_ = LogisticHead().fit(fusion_inputs, y_train)
        return self

    def stream_probabilities(self, images, classes=None):
        """Per-stream head probabilities, shape (n, n_streams)."""
        if not self.is_fitted:
            raise NotFittedError("detector used before fit")
        images = check_image_batch(images)
        if classes is None:
            classes = predict_classes(self.net, images, batch_size=self.batch_size)
        cols = [
            head.predict_proba(self._features(images, stream, classes))
            for stream, head in zip(self.streams_, self.heads_)
        ]
        return np.column_stack(cols)

    def score_samples(self, images):
        """Misclassification probability p in [0,1]; higher = less trustworthy."""
        if not self.is_fitted:
            raise NotFittedError("detector used before fit")
        return self.fusion_.predict_proba(self.stream_probabilities(images))

    predict_proba = score_samples

    def chosen_hyperparameters(self):
        if not self.is_fitted:
            raise NotFittedError("detector used before fit")
        return {r.kind: r.label for r in self.search_}


class GitDetector(MultiStreamDetector):
    """Identity stream plus configured transform streams with fused heads."""

    def __init__(self, net, streams=DEFAULT_GIT_STREAMS, autoencoder=None,
                 scale_by_param_count=False, batch_size=128):
        kinds = tuple(k for k in streams if k != "identity")
        super().__init__(
            net,
            ("identity",) + kinds,
            autoencoder=autoencoder,
            scale_by_param_count=scale_by_param_count,
            batch_size=batch_size,
        )


class GranDetector(MultiStreamDetector):
    """Single gaussian-smoothing stream, no identity stream."""

    def __init__(self, net, scale_by_param_count=False, batch_size=128):
        super().__init__(
            net,
            ("gaussian",),
            scale_by_param_count=scale_by_param_count,
            batch_size=batch_size,
        )

    @property
    def sigma_(self):
        if not self.is_fitted:
            raise NotFittedError("detector used before fit")
        return self.streams_[0].sigma
