"""Per-layer gradient-norm features.

For an input image the classifier first predicts a class from the raw image;
the image is then passed through a stream transform, and the cross-entropy
between the transformed image's output and that original prediction is
pushed backwards.  The L1 norm of each layer's weight-block gradient (bias
folded into its layer) forms a length-L feature vector measuring how much
the network's internals contradict the prediction.

Classifier weights are never modified; extraction is read-only.
"""

from dataclasses import dataclass

import numpy as np

from .autodiff import cross_entropy, onehot
from .validation import check_image_batch


@dataclass
class GradientFeatures:
    """Length-L vector of per-layer weight-gradient L1 norms for one stream."""

    values: np.ndarray
    stream: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError(f"feature vector must be 1-D, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError("feature values must be finite and non-negative")


def predicted_onehot(net, image):
    """Predicted class of the raw image as (index, one-hot row vector)."""
    logits = net.forward(image)
    y = int(np.argmax(logits[0]))
    return y, onehot([y], logits.shape[1])[0]


def _param_counts(net):
    return np.array(
        [b["weight"].size + b["bias"].size for b in net.weight_blocks()], dtype=np.float64
    )


def extract_gradient_features(net, image, transform, scale_by_param_count=False):
    """Feature vector for one image under one stream transform."""
    y, target = predicted_onehot(net, image)
    transformed = transform(image)
    logits, tape = net.forward(transformed, record=True)
    _, grad = cross_entropy(logits, target[None])
    grads = net.backward(tape, grad)
    values = grads.l1_norms()
    if scale_by_param_count:
        values = values / _param_counts(net)
    return GradientFeatures(values=values, stream=transform.label)


def extract_all_streams(net, image, transforms, scale_by_param_count=False):
    """One GradientFeatures per stream; the prediction is computed once
    from the raw image and reused for every stream."""
    if not transforms:
        raise ValueError("at least one stream transform is required")
    y, target = predicted_onehot(net, image)
    out = []
    for transform in transforms:
        logits, tape = net.forward(transform(image), record=True)
        _, grad = cross_entropy(logits, target[None])
        values = net.backward(tape, grad).l1_norms()
        if scale_by_param_count:
            values = values / _param_counts(net)
        out.append(GradientFeatures(values=values, stream=transform.label))
    return out


def predict_classes(net, images, batch_size=128):
    """Argmax classes for a batch, chunked."""
    images = check_image_batch(images)
    parts = []
    for start in range(0, len(images), batch_size):
        logits = net.forward(images[start : start + batch_size])
        parts.append(np.argmax(logits, axis=1))
    return np.concatenate(parts)


def feature_matrix(net, images, transform, classes=None, batch_size=128, scale_by_param_count=False):
    """(n, L) feature matrix for a whole image set under one transform.

    ``classes`` are the classifier's predictions on the *raw* images; they
    are computed here when not supplied.  Rows match
    :func:`extract_gradient_features` on the corresponding single image.
    """
    images = check_image_batch(images)
    if classes is None:
        classes = predict_classes(net, images, batch_size=batch_size)
    classes = np.asarray(classes)
    num_classes = net.output_shape[0]
    rows = []
    for start in range(0, len(images), batch_size):
        batch = images[start : start + batch_size]
        targets = onehot(classes[start : start + batch_size], num_classes)
        logits, tape = net.forward(transform(batch), record=True)
        # each sample carries its own scalar loss: rows of softmax - onehot
        zmax = logits.max(axis=1, keepdims=True)
        e = np.exp(logits - zmax)
        grad = (e / e.sum(axis=1, keepdims=True) - targets).astype(logits.dtype)
        norms = net.backward(tape, grad, per_sample=True).l1_norms()
        rows.append(norms)
    out = np.concatenate(rows).astype(np.float64)
    if scale_by_param_count:
        out = out / _param_counts(net)[None, :]
    return out


def write_feature_dump(path, sample_ids, stream_label, features):
    """Append one tab-delimited record per sample: id, stream, L values."""
    features = np.asarray(features)
    with open(path, "a", encoding="utf-8") as fh:
        for sid, row in zip(sample_ids, features):
            vals = "\t".join(repr(float(v)) for v in np.atleast_1d(row))
            fh.write(f"{sid}\t{stream_label}\t{vals}\n")
    return path
