"""Loss functions fused with their output-side gradients.

Classifier nets expose raw logits; the softmax lives inside the
cross-entropy via log-sum-exp with max subtraction, which keeps both the
loss and its gradient finite for any finite logits.
"""

import numpy as np

from ..errors import ShapeError


def softmax(logits):
    z = np.asarray(logits)
    if z.ndim == 1:
        z = z[None]
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def onehot(classes, num_classes, dtype=np.float64):
    classes = np.atleast_1d(np.asarray(classes, dtype=np.int64))
    out = np.zeros((classes.shape[0], num_classes), dtype=dtype)
    out[np.arange(classes.shape[0]), classes] = 1.0
    return out

def uniform_target(num_classes, n=1, dtype=np.float64):
    return np.full((n, num_classes), 1.0 / num_classes, dtype=dtype)


def cross_entropy(logits, targets):
    """Mean cross-entropy between softmax(logits) and target distributions.

    Returns ``(loss, grad)`` where ``grad`` is the exact gradient of the
    returned (batch-averaged) loss at the logits: (softmax - target) / N.
    For a single sample this is the familiar softmax-minus-target.
    """
    z = np.asarray(logits)
    t = np.asarray(targets)
    if z.ndim == 1:
        z = z[None]
    if t.ndim == 1:
        t = t[None]
    if z.shape != t.shape:
        raise ShapeError(f"logits shape {z.shape} != target shape {t.shape}")
    sums = t.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-6) or np.any(t < 0):
        raise ValueError("each target row must be a probability vector (sum 1 within 1e-6)")
    zmax = z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z - zmax).sum(axis=1, keepdims=True)) + zmax
    logp = z - lse
    n = z.shape[0]
    loss = float(-(t * logp).sum() / n)
    grad = (np.exp(logp) - t) / n
    return loss, grad.astype(z.dtype, copy=False)


def binary_cross_entropy(outputs, targets, eps=1e-7):
    """Mean per-element binary cross-entropy and its gradient at the outputs.

    Outputs are clipped into [eps, 1-eps] before the logs so that saturated
    sigmoid activations cannot produce non-finite values.
    """
    o = np.asarray(outputs)
    t = np.asarray(targets)
    if o.shape != t.shape:
        raise ShapeError(f"output shape {o.shape} != target shape {t.shape}")
    oc = np.clip(o, eps, 1.0 - eps)
    count = o.size
    loss = float(-(t * np.log(oc) + (1.0 - t) * np.log(1.0 - oc)).sum() / count)
    grad = (oc - t) / (oc * (1.0 - oc)) / count
    return loss, grad.astype(o.dtype, copy=False)
