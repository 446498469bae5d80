"""Sequential network container with tape-based reverse-mode differentiation."""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError, StaleTapeError


@dataclass
class Tape:
    """Recorded activations from one forward pass, consumed by ``backward``."""

    net: "NetworkGraph"
    version: int
    batch_size: int
    contexts: list


@dataclass
class GradientSet:
    """Per-layer weight/bias gradients, aligned with ``net.param_layers``."""

    layers: list  # list of {"weight": ..., "bias": ...}
    input_grad: np.ndarray | None = None
    per_sample: bool = False

    def l1_norms(self):
        """L1 norm of each layer block, bias folded into its layer.

        Returns shape (L,) for batch-summed gradients or (N, L) for
        per-sample gradients.
        """
        norms = []
        for blocks in self.layers:
            if self.per_sample:
                n = blocks["weight"].shape[0]
                total = np.abs(blocks["weight"].reshape(n, -1)).sum(axis=1)
                total = total + np.abs(blocks["bias"].reshape(n, -1)).sum(axis=1)
            else:
                total = np.abs(blocks["weight"]).sum() + np.abs(blocks["bias"]).sum()
            norms.append(total)
        return np.stack(norms, axis=-1) if self.per_sample else np.asarray(norms)


class NetworkGraph:
    """Ordered layer list over a fixed input shape and dtype.

    Weight-carrying layers are numbered 1..L in order; biases belong to
    their layer's block.  A graph with frozen weights is immutable and can
    be shared; training mutates weights in place and must call
    ``mark_updated`` so outstanding tapes are invalidated.
    """

    def __init__(self, input_shape, layers, dtype=np.float32, rng=None):
        self.input_shape = tuple(int(s) for s in input_shape)
        self.layers = list(layers)
        self.dtype = np.dtype(dtype)
        shape = self.input_shape
        for layer in self.layers:
            shape = layer.bind(shape, self.dtype)
        self.output_shape = tuple(shape)
        if rng is None:
            rng = np.random.default_rng(0)
        for layer in self.layers:
            layer.init_params(rng, self.dtype)
        self._version = 0

    @property
    def param_layers(self):
        return [l for l in self.layers if l.has_params]

    @property
    def n_param_layers(self):
        return len(self.param_layers)

    def weight_blocks(self):
        return [l.params for l in self.param_layers]

    def mark_updated(self):
        """Invalidate all tapes recorded before this point."""
        self._version += 1

    def describe(self):
        lines = [f"input {','.join(str(s) for s in self.input_shape)}", f"dtype {self.dtype.name}"]
        lines += [f"layer {l.spec_line()}" for l in self.layers]
        return lines

    def weights_hash(self):
        """Stable digest of architecture plus all weight bytes."""
        h = hashlib.blake2s()
        for line in self.describe():
            h.update(line.encode("utf-8"))
            h.update(b"\n")
        for blocks in self.weight_blocks():
            for name in ("weight", "bias"):
                le = f"<{self.dtype.kind}{self.dtype.itemsize}"
                h.update(np.ascontiguousarray(blocks[name], dtype=le).tobytes())
        return h.hexdigest()

    def forward(self, x, record=False):
        """Run the net on a batch; returns outputs, plus a Tape when recording."""
        x = np.asarray(x)
        if x.ndim == len(self.input_shape):
            x = x[None]
        if tuple(x.shape[1:]) != self.input_shape:
            raise ShapeError(
                f"input shape {tuple(x.shape[1:])} does not match network input {self.input_shape}"
            )
        x = x.astype(self.dtype, copy=False)
        contexts = []
        for layer in self.layers:
            x, ctx = layer.forward(x, record=record)
            if record:
                contexts.append(ctx)
        if record:
            return x, Tape(net=self, version=self._version, batch_size=x.shape[0], contexts=contexts)
        return x

    def backward(self, tape, output_grad, want_input_grad=False, per_sample=False):
        """Reverse pass: gradients of a scalar loss w.r.t. every weight block.

        ``output_grad`` is dLoss/dOutput.  With ``per_sample=True`` each
        sample is treated as carrying its own scalar loss (row n of
        ``output_grad``), and weight gradients gain a leading sample axis.
        """
        if tape is None or tape.net is not self:
            raise StaleTapeError("tape does not belong to this network")
        if tape.version != self._version:
            raise StaleTapeError("tape is stale: weights changed since the recording forward")
        g = np.asarray(output_grad, dtype=self.dtype)
        expect = (tape.batch_size,) + self.output_shape
        if g.shape != expect:
            raise ShapeError(f"output gradient shape {g.shape} does not match {expect}")
        layer_grads = []
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            ctx = tape.contexts[i]
            if layer.has_params:
                layer_grads.append(layer.param_grads(ctx, g, per_sample=per_sample))
            if i > 0 or want_input_grad:
                g = layer.backward_input(ctx, g)
        layer_grads.reverse()
        return GradientSet(
            layers=layer_grads,
            input_grad=(g if want_input_grad else None),
            per_sample=per_sample,
        )
