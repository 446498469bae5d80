"""White-box adversarial attacks against the classifier under test.

Sign-step attacks (single and iterated) work on batches; the
linearization-based minimal-perturbation attack and the L2 optimization
attack run per sample / per batch with their standard formulations.  All
attacks keep images inside [0,1].
"""

from dataclasses import dataclass

import numpy as np

from ..autodiff import cross_entropy, onehot
from ..validation import check_image_batch

ATTACK_KINDS = ("fgsm", "bim", "deepfool", "cwl2")


@dataclass
class AttackConfig:
    kind: str
    severity: float = 0.0  # epsilon or step size, per kind
    steps: int = 10  # bim
    max_iter: int = 50  # deepfool
    overshoot: float = 0.02  # deepfool
    c: float = 1.0  # cwl2 hinge weight
    lr: float = 0.01  # cwl2 step size
    iterations: int = 200  # cwl2

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind: {self.kind!r}")
        if self.severity < 0:
            raise ValueError(f"attack severity must be non-negative, got {self.severity}")


def _loss_input_grad(net, images, classes):
    logits, tape = net.forward(images, record=True)
    _, grad = cross_entropy(logits, onehot(classes, logits.shape[1]))
    return net.backward(tape, grad, want_input_grad=True).input_grad


def fgsm(net, images, labels, eps):
    """One ascent step of size eps along the loss-gradient sign."""
    images = check_image_batch(images)
    g = _loss_input_grad(net, images, np.asarray(labels))
    return np.clip(images + eps * np.sign(g), 0.0, 1.0).astype(images.dtype, copy=False)


def bim(net, images, labels, eps, steps=10):
    """Iterated sign steps of size eps/steps, re-projected into the
    eps-ball around the originals and into [0,1] after every step."""
    if steps < 1:
        raise ValueError(f"bim needs at least one step, got {steps}")
    images = check_image_batch(images)
    labels = np.asarray(labels)
    alpha = eps / steps
    adv = images
    for _ in range(steps):
        adv = fgsm(net, adv, labels, alpha)
        adv = np.clip(adv, images - eps, images + eps)
        adv = np.clip(adv, 0.0, 1.0)
    return adv.astype(images.dtype, copy=False)


def _class_gradients(net, tape, num_classes):
    grads = []
    for c in range(num_classes):
        seed = np.zeros((1, num_classes))
        seed[0, c] = 1.0
        grads.append(net.backward(tape, seed, want_input_grad=True).input_grad[0].astype(np.float64))
    return grads


def deepfool(net, image, max_iter=50, overshoot=0.02):
    """Iterative linearized walk to the nearest class boundary.

    Returns ``(adversarial_image, converged)``; the accumulated perturbation
    is scaled by (1 + overshoot).  The loop condition is checked before any
    step, so an input already past the boundary of its own argmax target is
    returned unchanged.
    """
    image = np.asarray(image)
    single = image[None] if image.ndim == 3 else image
    num_classes = net.output_shape[0]
    k0 = int(np.argmax(net.forward(single)[0]))
    r_total = np.zeros(single.shape[1:], dtype=np.float64)
    converged = False
    for _ in range(max_iter):
        candidate = np.clip(single[0] + (1.0 + overshoot) * r_total, 0.0, 1.0)
        logits, tape = net.forward(candidate[None].astype(single.dtype), record=True)
        if int(np.argmax(logits[0])) != k0:
            converged = True
            break
        grads = _class_gradients(net, tape, num_classes)
        best = None
        for c in range(num_classes):
            if c == k0:
                continue
            w = grads[c] - grads[k0]
            f = float(logits[0, c] - logits[0, k0])
            wnorm = float(np.sqrt((w * w).sum()))
            if wnorm < 1e-12:
                continue
            ratio = abs(f) / wnorm
            if best is None or ratio < best[0]:
                best = (ratio, f, w, wnorm)
        if best is None:
            break
        _, f, w, wnorm = best
        r_total = r_total + (abs(f) / (wnorm * wnorm)) * w
    adv = np.clip(single[0] + (1.0 + overshoot) * r_total, 0.0, 1.0).astype(single.dtype)
    return (adv if image.ndim == 3 else adv[None]), converged


def cwl2(net, images, labels, c=1.0, lr=0.01, iterations=200, kappa=0.0):
    """Tanh-box L2 attack: minimize ||delta||^2 + c * hinge(logit margin).

    Plain gradient descent on the tanh pre-image; returns, per sample, the
    successful iterate of smallest L2 norm, or the lowest-objective iterate
    when the attack never succeeds.
    """
    images = check_image_batch(images)
    labels = np.asarray(labels)
    n = len(images)
    num_classes = net.output_shape[0]
    x = images.astype(np.float64)
    tiny = 1e-6
    u = np.arctanh(2.0 * np.clip(x, tiny, 1.0 - tiny) - 1.0)

    best_adv = images.copy()
    best_l2 = np.full(n, np.inf)
    best_obj = np.full(n, np.inf)
    best_obj_adv = images.copy()
    idx = np.arange(n)
    for _ in range(iterations):
        adv = (np.tanh(u) + 1.0) / 2.0
        logits, tape = net.forward(adv.astype(images.dtype), record=True)
        logits64 = logits.astype(np.float64)
        z_true = logits64[idx, labels]
        masked = logits64.copy()
        masked[idx, labels] = -np.inf
        other = masked.argmax(axis=1)
        z_other = logits64[idx, other]
        hinge = np.maximum(z_true - z_other, -kappa)
        l2sq = ((adv - x) ** 2).reshape(n, -1).sum(axis=1)
        obj = l2sq + c * hinge

        success = logits64.argmax(axis=1) != labels
        better = success & (l2sq < best_l2)
        best_l2[better] = l2sq[better]
        best_adv[better] = adv[better].astype(images.dtype)
        improved = obj < best_obj
        best_obj[improved] = obj[improved]
        best_obj_adv[improved] = adv[improved].astype(images.dtype)

        gout = np.zeros((n, num_classes))
        active = hinge > -kappa
        gout[idx[active], labels[active]] = c
        gout[idx[active], other[active]] = -c
        gz = net.backward(tape, gout.astype(logits.dtype), want_input_grad=True).input_grad.astype(np.float64)
        grad_adv = 2.0 * (adv - x) + gz
        u = u - lr * grad_adv * (1.0 - np.tanh(u) ** 2) / 2.0

    unsuccessful = ~np.isfinite(best_l2)
    best_adv[unsuccessful] = best_obj_adv[unsuccessful]
    return best_adv
