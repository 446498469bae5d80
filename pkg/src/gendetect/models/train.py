"""Training loops for the classifier under test and the stream autoencoder."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..autodiff import binary_cross_entropy, cross_entropy, onehot, softmax
from ..errors import ShapeError, TrainingDivergedError
from ..rng import stream_rng
from .presets import build_autoencoder, build_classifier

log = logging.getLogger("gendetect")


@dataclass
class ClassifierConfig:
    input_shape: tuple = (3, 32, 32)
    num_classes: int = 4
    preset: str = "smallcnn-v1"
    epochs: int = 20
    batch_size: int = 64
    lr: float = 0.05
    momentum: float = 0.9
    seed: int = 0


@dataclass
class AutoencoderConfig:
    input_shape: tuple = (3, 32, 32)
    epochs: int = 30
    batch_size: int = 64
    lr: float = 1e-3
    betas: tuple = (0.9, 0.999)
    seed: int = 0


@dataclass
class TrainingReport:
    epoch_losses: list = field(default_factory=list)
    final_train_accuracy: float = float("nan")
    final_val_accuracy: float = float("nan")
    seed: int = 0
    epochs: int = 0


class SGDMomentum:
    def __init__(self, net, momentum=0.9):
        self.momentum = momentum
        self.velocity = [
            {k: np.zeros_like(v) for k, v in layer.params.items()} for layer in net.param_layers
        ]

    def step(self, net, grads, lr):
        for layer, vel, blocks in zip(net.param_layers, self.velocity, grads.layers):
            for name, g in blocks.items():
                vel[name] = self.momentum * vel[name] + g
                layer.params[name] -= (lr * vel[name]).astype(layer.params[name].dtype, copy=False)
        net.mark_updated()


class Adam:
    def __init__(self, net, betas=(0.9, 0.999), eps=1e-8):
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = [{k: np.zeros_like(v) for k, v in l.params.items()} for l in net.param_layers]
        self.v = [{k: np.zeros_like(v) for k, v in l.params.items()} for l in net.param_layers]

    def step(self, net, grads, lr):
        self.t += 1
        bc1 = 1.0 - self.b1**self.t
        bc2 = 1.0 - self.b2**self.t
        for layer, m, v, blocks in zip(net.param_layers, self.m, self.v, grads.layers):
            for name, g in blocks.items():
                m[name] = self.b1 * m[name] + (1.0 - self.b1) * g
                v[name] = self.b2 * v[name] + (1.0 - self.b2) * g * g
                update = lr * (m[name] / bc1) / (np.sqrt(v[name] / bc2) + self.eps)
                layer.params[name] -= update.astype(layer.params[name].dtype, copy=False)
        net.mark_updated()


def _as_xy(dataset):
    if hasattr(dataset, "images"):
        return dataset.images, dataset.labels
    x, y = dataset
    return np.asarray(x), np.asarray(y)


def predict(net, batch):
    """Classes (argmax, lowest index on ties) and softmax vectors, order preserving."""
    logits = net.forward(batch)
    probs = softmax(logits)
    return np.argmax(logits, axis=1), probs


def accuracy(net, images, labels, batch_size=256):
    hits = 0
    for start in range(0, len(images), batch_size):
        classes, _ = predict(net, images[start : start + batch_size])
        hits += int((classes == labels[start : start + batch_size]).sum())
    return hits / len(images)


def _cosine_lr(base, epoch, total):
    return base * 0.5 * (1.0 + math.cos(math.pi * epoch / max(total, 1)))


def _warmup_cosine_lr(base, step, steps_per_epoch, epoch, total_epochs):
    """Linear ramp over the first epoch, then per-epoch cosine decay.

    The ramp keeps the first momentum-amplified updates from saturating the
    ReLUs; without it the peak rate can kill the net in the first batches.
    """
    if epoch == 0 and total_epochs > 1:
        return base * (step + 1) / steps_per_epoch
    return _cosine_lr(base, epoch, total_epochs)


def train_classifier(config, train_set, val_set):
    """Train the classifier under test; returns (net, report).

    SGD with momentum and a per-epoch cosine-decayed learning rate; aborts
    with a diagnostic if the loss stops being finite.
    """
    x_train, y_train = _as_xy(train_set)
    x_val, y_val = _as_xy(val_set)
    for name, y in (("train", y_train), ("val", y_val)):
        if y.size and int(np.max(y)) >= config.num_classes:
            raise ValueError(
                f"{name} labels exceed class count {config.num_classes}: max {int(np.max(y))}"
            )
    net = build_classifier(
        config.preset,
        config.input_shape,
        config.num_classes,
        rng=stream_rng(config.seed, "classifier-init"),
    )
    report = TrainingReport(seed=config.seed, epochs=config.epochs)
    opt = SGDMomentum(net, momentum=config.momentum)
    shuffle = stream_rng(config.seed, "classifier-shuffle")
    n = len(x_train)
    steps_per_epoch = max(1, (n + config.batch_size - 1) // config.batch_size)
    for epoch in range(config.epochs):
        order = shuffle.permutation(n)
        losses = []
        for step, start in enumerate(range(0, n, config.batch_size)):
            lr = _warmup_cosine_lr(config.lr, step, steps_per_epoch, epoch, config.epochs)
            idx = order[start : start + config.batch_size]
            logits, tape = net.forward(x_train[idx], record=True)
            loss, grad = cross_entropy(logits, onehot(y_train[idx], config.num_classes))
            if not math.isfinite(loss):
                raise TrainingDivergedError(
                    f"classifier loss diverged at epoch {epoch}, batch {step}"
                )
            grads = net.backward(tape, grad)
            opt.step(net, grads, lr)
            losses.append(loss)
        report.epoch_losses.append(float(np.mean(losses)))
        log.debug("classifier epoch %d: loss %.4f", epoch, report.epoch_losses[-1])
    report.final_train_accuracy = accuracy(net, x_train, y_train)
    report.final_val_accuracy = accuracy(net, x_val, y_val) if len(x_val) else float("nan")
    return net, report


def train_autoencoder(config, train_set):
    """Train the reconstruction autoencoder with per-pixel BCE and Adam."""
    x_train, _ = _as_xy(train_set)
    c, h, w = x_train.shape[1:]
    if c != 3 or h % 8 or w % 8:
        raise ShapeError(
            f"autoencoder training needs 3-channel images with H,W divisible by 8, got {(c, h, w)}"
        )
    net = build_autoencoder((c, h, w), rng=stream_rng(config.seed, "autoencoder-init"))
    opt = Adam(net, betas=config.betas)
    shuffle = stream_rng(config.seed, "autoencoder-shuffle")
    n = len(x_train)
    for epoch in range(config.epochs):
        order = shuffle.permutation(n)
        losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            batch = x_train[idx]
            out, tape = net.forward(batch, record=True)
            loss, grad = binary_cross_entropy(out, batch.astype(out.dtype, copy=False))
            if not math.isfinite(loss):
                raise TrainingDivergedError(
                    f"autoencoder loss diverged at epoch {epoch}, batch {start // config.batch_size}"
                )
            grads = net.backward(tape, grad)
            opt.step(net, grads, config.lr)
            losses.append(loss)
        log.debug("autoencoder epoch %d: bce %.4f", epoch, float(np.mean(losses)))
    return net
