"""Sign-gradient input shift used ahead of the distance-based detector."""

import numpy as np

from ..autodiff import cross_entropy, onehot
from ..validation import check_image_batch


def input_shift_direction(net, images, batch_size=128):
    """sign(-grad) of the cross-entropy at the predicted class, per pixel.

    The shift magnitude multiplies this direction, so it can be cached and
    reused across a whole magnitude grid.
    """
    images = check_image_batch(images)
    out = np.empty_like(images)
    for start in range(0, len(images), batch_size):
        batch = images[start : start + batch_size]
        logits, tape = net.forward(batch, record=True)
        classes = np.argmax(logits, axis=1)
        _, grad = cross_entropy(logits, onehot(classes, logits.shape[1]))
        g = net.backward(tape, grad, want_input_grad=True).input_grad
        out[start : start + batch_size] = np.sign(-g).astype(images.dtype)
    return out


def odin_input_shift(net, images, eps, batch_size=128):
    """Shifted images ``x - eps * sign(-grad_x L(x, y))``, clipped to [0,1].

    ``y`` is the predicted class of each raw image; with eps=0 the images
    are returned unchanged.
    """
    if eps < 0:
        raise ValueError(f"shift magnitude must be non-negative, got {eps}")
    images = check_image_batch(images)
    if eps == 0:
        return images
    direction = input_shift_direction(net, images, batch_size=batch_size)
    return np.clip(images - eps * direction, 0.0, 1.0)
