"""Layer primitives for small sequential convolutional networks.

Each layer knows how to infer its output shape (rejecting mismatches before
any compute), run a forward pass that optionally records a context for the
backward pass, and push gradients backwards.  Weight gradients can be
produced either summed over the batch (training) or per sample (gradient
feature extraction), sharing one forward code path.
"""

import numpy as np

from ..errors import ShapeError


def _pair(v):
    return (int(v), int(v)) if np.isscalar(v) else (int(v[0]), int(v[1]))


def _window_indices(channels, h, w, kh, kw, stride, pad):
    """Flat gather indices mapping a padded (C,Hp,Wp) image to sliding windows.

    Returns ``(flat, ho, wo, hp, wp)`` where ``flat`` has shape
    ``(C*kh*kw, ho*wo)`` and indexes the flattened padded image.
    """
    hp, wp = h + 2 * pad, w + 2 * pad
    ho = (hp - kh) // stride + 1
    wo = (wp - kw) // stride + 1
    if ho < 1 or wo < 1:
        raise ShapeError(
            f"kernel {kh}x{kw} stride {stride} pad {pad} does not fit input {h}x{w}"
        )
    c_idx = np.repeat(np.arange(channels), kh * kw)
    ky, kx = np.meshgrid(np.arange(kh), np.arange(kw), indexing="ij")
    ky = np.tile(ky.ravel(), channels)
    kx = np.tile(kx.ravel(), channels)
    oy, ox = np.meshgrid(np.arange(ho) * stride, np.arange(wo) * stride, indexing="ij")
    rows = ky[:, None] + oy.ravel()[None, :]
    cols = kx[:, None] + ox.ravel()[None, :]
    flat = (c_idx[:, None] * hp + rows) * wp + cols
    return flat, ho, wo, hp, wp


def _im2col(x, flat, hp, wp, pad):
    n, c = x.shape[:2]
    if pad:
        xp = np.zeros((n, c, hp, wp), dtype=x.dtype)
        xp[:, :, pad : hp - pad, pad : wp - pad] = x
    else:
        xp = x
    # take (not fancy indexing) keeps the gathered columns C-contiguous,
    # which the downstream matmuls rely on for speed
    cols = xp.reshape(n, -1).take(flat.reshape(-1), axis=1)
    return cols.reshape(n, flat.shape[0], flat.shape[1])


def _col2im(cols, n, c, hp, wp, pad, flat, dtype, idx_cache=None):
    """Adjoint of :func:`_im2col`: scatter-add columns back into images.

    Accumulates in float64 via ``bincount`` (ordered, deterministic) and
    casts once to ``dtype``.  The combined per-batch scatter index is cached
    per batch size when a cache dict is supplied.
    """
    size = c * hp * wp
    idx = idx_cache.get(n) if idx_cache is not None else None
    if idx is None:
        idx = (flat.reshape(-1)[None, :] + (np.arange(n) * size)[:, None]).ravel()
        if idx_cache is not None:
            idx_cache[n] = idx
    out = np.bincount(idx, weights=cols.reshape(-1), minlength=n * size)
    out = out.reshape(n, c, hp, wp)
    if pad:
        out = out[:, :, pad : hp - pad, pad : wp - pad]
    return np.ascontiguousarray(out).astype(dtype)


class Layer:
    """Base layer: shape inference + forward/backward on bound shapes."""

    kind = "layer"
    has_params = False

    def bind(self, in_shape, dtype):
        """Validate ``in_shape`` (per-sample) and return the output shape."""
        raise NotImplementedError

    def init_params(self, rng, dtype):
        pass

    @property
    def params(self):
        return {}

    def set_params_from(self, blocks):
        pass

    def forward(self, x, record=False):
        raise NotImplementedError

    def backward_input(self, ctx, gout):
        raise NotImplementedError

    def param_grads(self, ctx, gout, per_sample=False):
        raise NotImplementedError

    def spec_line(self):
        return self.kind


class Dense(Layer):
    kind = "dense"
    has_params = True

    def __init__(self, in_features, out_features):
        if in_features < 1 or out_features < 1:
            raise ShapeError("dense layer needs positive feature counts")
        self.in_features = int(in_features)
        self.out_features = int(out_features)
        self.weight = None
        self.bias = None

    def bind(self, in_shape, dtype):
        if len(in_shape) != 1 or in_shape[0] != self.in_features:
            raise ShapeError(
                f"dense expects flat input of {self.in_features} features, got {in_shape}"
            )
        return (self.out_features,)

    def init_params(self, rng, dtype):
        scale = np.sqrt(2.0 / self.in_features)
        self.weight = (rng.standard_normal((self.out_features, self.in_features)) * scale).astype(dtype)
        self.bias = np.zeros(self.out_features, dtype=dtype)

    @property
    def params(self):
        return {"weight": self.weight, "bias": self.bias}

    def set_params_from(self, blocks):
        self.weight = blocks["weight"]
        self.bias = blocks["bias"]

    def forward(self, x, record=False):
        y = x @ self.weight.T + self.bias
        return y, (x if record else None)

    def backward_input(self, ctx, gout):
        return gout @ self.weight

    def param_grads(self, ctx, gout, per_sample=False):
        x = ctx
        if per_sample:
            return {"weight": gout[:, :, None] * x[:, None, :], "bias": gout.copy()}
        return {"weight": gout.T @ x, "bias": gout.sum(axis=0)}

    def spec_line(self):
        return f"dense in={self.in_features} out={self.out_features}"


class Conv2d(Layer):
    kind = "conv2d"
    has_params = True

    def __init__(self, in_channels, out_channels, kernel, stride=1, padding=0):
        self.in_channels = int(in_channels)
        self.out_channels = int(out_channels)
        self.kernel = int(kernel)
        self.stride = int(stride)
        self.padding = int(padding)
        if min(self.in_channels, self.out_channels, self.kernel, self.stride) < 1 or self.padding < 0:
            raise ShapeError("invalid conv2d parameters")
        self.weight = None
        self.bias = None
        self._geom = None
        self._idx_cache = {}

    def bind(self, in_shape, dtype):
        if len(in_shape) != 3 or in_shape[0] != self.in_channels:
            raise ShapeError(
                f"conv2d expects ({self.in_channels},H,W) input, got {in_shape}"
            )
        _, h, w = in_shape
        flat, ho, wo, hp, wp = _window_indices(
            self.in_channels, h, w, self.kernel, self.kernel, self.stride, self.padding
        )
        self._geom = (flat, ho, wo, hp, wp, h, w)
        return (self.out_channels, ho, wo)

    def init_params(self, rng, dtype):
        fan_in = self.in_channels * self.kernel * self.kernel
        scale = np.sqrt(2.0 / fan_in)
        self.weight = (
            rng.standard_normal((self.out_channels, self.in_channels, self.kernel, self.kernel)) * scale
        ).astype(dtype)
        self.bias = np.zeros(self.out_channels, dtype=dtype)

    @property
    def params(self):
        return {"weight": self.weight, "bias": self.bias}

    def set_params_from(self, blocks):
        self.weight = blocks["weight"]
        self.bias = blocks["bias"]

    def forward(self, x, record=False):
        flat, ho, wo, hp, wp, _, _ = self._geom
        cols = _im2col(x, flat, hp, wp, self.padding)
        w2 = self.weight.reshape(self.out_channels, -1)
        y = np.matmul(w2, cols) + self.bias[:, None]
        y = y.reshape(x.shape[0], self.out_channels, ho, wo)
        return y, (cols if record else None)

    def backward_input(self, ctx, gout):
        flat, ho, wo, hp, wp, h, w = self._geom
        n = gout.shape[0]
        g2 = gout.reshape(n, self.out_channels, ho * wo)
        w2 = self.weight.reshape(self.out_channels, -1)
        gcols = np.matmul(w2.T, g2)
        return _col2im(gcols, n, self.in_channels, hp, wp, self.padding, flat,
                       gout.dtype, idx_cache=self._idx_cache)

    def param_grads(self, ctx, gout, per_sample=False):
        cols = ctx
        n = gout.shape[0]
        g2 = gout.reshape(n, self.out_channels, -1)
        wshape = self.weight.shape
        if per_sample:
            gw = np.matmul(g2, cols.transpose(0, 2, 1))
            return {"weight": gw.reshape((n,) + wshape), "bias": g2.sum(axis=2)}
        gw = np.tensordot(g2, cols, axes=([0, 2], [0, 2]))
        return {"weight": gw.reshape(wshape), "bias": g2.sum(axis=(0, 2))}

    def spec_line(self):
        return (
            f"conv2d in={self.in_channels} out={self.out_channels} "
            f"k={self.kernel} s={self.stride} p={self.padding}"
        )


class ConvTranspose2d(Layer):
    kind = "conv_transpose2d"
    has_params = True

    def __init__(self, in_channels, out_channels, kernel, stride=1, padding=0):
        self.in_channels = int(in_channels)
        self.out_channels = int(out_channels)
        self.kernel = int(kernel)
        self.stride = int(stride)
        self.padding = int(padding)
        if min(self.in_channels, self.out_channels, self.kernel, self.stride) < 1 or self.padding < 0:
            raise ShapeError("invalid conv_transpose2d parameters")
        self.weight = None
        self.bias = None
        self._geom = None
        self._idx_cache = {}

    def bind(self, in_shape, dtype):
        if len(in_shape) != 3 or in_shape[0] != self.in_channels:
            raise ShapeError(
                f"conv_transpose2d expects ({self.in_channels},H,W) input, got {in_shape}"
            )
        _, h, w = in_shape
        ho = (h - 1) * self.stride - 2 * self.padding + self.kernel
        wo = (w - 1) * self.stride - 2 * self.padding + self.kernel
        if ho < 1 or wo < 1:
            raise ShapeError("conv_transpose2d output would be empty")
        # windows of the virtual forward conv mapping output back to input
        flat, hv, wv, hp, wp = _window_indices(
            self.out_channels, ho, wo, self.kernel, self.kernel, self.stride, self.padding
        )
        if (hv, wv) != (h, w):
            raise ShapeError("conv_transpose2d geometry mismatch")
        self._geom = (flat, ho, wo, hp, wp, h, w)
        return (self.out_channels, ho, wo)

    def init_params(self, rng, dtype):
        fan_in = self.in_channels * self.kernel * self.kernel
        scale = np.sqrt(2.0 / fan_in)
        self.weight = (
            rng.standard_normal((self.in_channels, self.out_channels, self.kernel, self.kernel)) * scale
        ).astype(dtype)
        self.bias = np.zeros(self.out_channels, dtype=dtype)

    @property
    def params(self):
        return {"weight": self.weight, "bias": self.bias}

    def set_params_from(self, blocks):
        self.weight = blocks["weight"]
        self.bias = blocks["bias"]

    def forward(self, x, record=False):
        flat, ho, wo, hp, wp, h, w = self._geom
        n = x.shape[0]
        x2 = x.reshape(n, self.in_channels, h * w)
        w2 = self.weight.reshape(self.in_channels, -1)
        cols = np.matmul(w2.T, x2)
        y = _col2im(cols, n, self.out_channels, hp, wp, self.padding, flat,
                    x.dtype, idx_cache=self._idx_cache)
        y = y + self.bias[None, :, None, None]
        return y, (x2 if record else None)

    def backward_input(self, ctx, gout):
        flat, ho, wo, hp, wp, h, w = self._geom
        n = gout.shape[0]
        gcols = _im2col(gout, flat, hp, wp, self.padding)
        w2 = self.weight.reshape(self.in_channels, -1)
        gx = np.matmul(w2, gcols)
        return gx.reshape(n, self.in_channels, h, w)

    def param_grads(self, ctx, gout, per_sample=False):
        flat, ho, wo, hp, wp, h, w = self._geom
        x2 = ctx
        n = gout.shape[0]
        gcols = _im2col(gout, flat, hp, wp, self.padding)
        wshape = self.weight.shape
        if per_sample:
            gw = np.matmul(x2, gcols.transpose(0, 2, 1))
            return {"weight": gw.reshape((n,) + wshape), "bias": gout.sum(axis=(2, 3))}
        gw = np.tensordot(x2, gcols, axes=([0, 2], [0, 2]))
        return {"weight": gw.reshape(wshape), "bias": gout.sum(axis=(0, 2, 3))}

    def spec_line(self):
        return (
            f"conv_transpose2d in={self.in_channels} out={self.out_channels} "
            f"k={self.kernel} s={self.stride} p={self.padding}"
        )


class ReLU(Layer):
    kind = "relu"

    def bind(self, in_shape, dtype):
        return tuple(in_shape)

    def forward(self, x, record=False):
        y = np.maximum(x, 0)
        return y, ((x > 0) if record else None)

    def backward_input(self, ctx, gout):
        return gout * ctx

    def spec_line(self):
        return "relu"


class Sigmoid(Layer):
    """Logistic activation, output clipped into the open interval (0,1)."""

    kind = "sigmoid"

    def bind(self, in_shape, dtype):
        self._lo = np.finfo(dtype).tiny
        self._hi = np.nextafter(dtype.type(1), dtype.type(0))
        return tuple(in_shape)

    def forward(self, x, record=False):
        y = np.empty_like(x)
        pos = x >= 0
        y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        y[~pos] = ex / (1.0 + ex)
        np.clip(y, self._lo, self._hi, out=y)
        return y, (y if record else None)

    def backward_input(self, ctx, gout):
        return gout * ctx * (1.0 - ctx)

    def spec_line(self):
        return "sigmoid"


class Softmax(Layer):
    kind = "softmax"

    def bind(self, in_shape, dtype):
        if len(in_shape) != 1:
            raise ShapeError(f"softmax expects a flat input, got {in_shape}")
        return tuple(in_shape)

    def forward(self, x, record=False):
        z = x - x.max(axis=1, keepdims=True)
        e = np.exp(z)
        y = e / e.sum(axis=1, keepdims=True)
        return y, (y if record else None)

    def backward_input(self, ctx, gout):
        y = ctx
        return y * (gout - (gout * y).sum(axis=1, keepdims=True))

    def spec_line(self):
        return "softmax"


class MaxPool2d(Layer):
    kind = "max_pool2d"

    def __init__(self, kernel, stride=None):
        self.kernel = int(kernel)
        self.stride = int(stride) if stride is not None else self.kernel
        if self.kernel < 1 or self.stride < 1:
            raise ShapeError("invalid max_pool2d parameters")
        self._geom = None

    def bind(self, in_shape, dtype):
        if len(in_shape) != 3:
            raise ShapeError(f"max_pool2d expects (C,H,W) input, got {in_shape}")
        c, h, w = in_shape
        flat, ho, wo, hp, wp = _window_indices(1, h, w, self.kernel, self.kernel, self.stride, 0)
        self._geom = (flat, ho, wo, hp, wp, c, h, w)
        # non-overlapping tiles reduce by pure reshape, no gather/scatter
        self._tiled = self.stride == self.kernel and h % self.kernel == 0 and w % self.kernel == 0
        return (c, ho, wo)

    def _windows_tiled(self, x):
        n, c, h, w = x.shape
        k = self.kernel
        t = x.reshape(n, c, h // k, k, w // k, k).transpose(0, 1, 2, 4, 3, 5)
        return np.ascontiguousarray(t).reshape(n, c, h // k, w // k, k * k)

    def forward(self, x, record=False):
        flat, ho, wo, hp, wp, c, h, w = self._geom
        n = x.shape[0]
        if self._tiled:
            win = self._windows_tiled(x)
            y = win.max(axis=-1)
            return y, (win.argmax(axis=-1) if record else None)
        cols = _im2col(x.reshape(n * c, 1, h, w), flat, hp, wp, 0)
        amax = cols.argmax(axis=1)
        y = np.take_along_axis(cols, amax[:, None, :], axis=1)
        y = y.reshape(n, c, ho, wo)
        return y, (amax if record else None)

    def backward_input(self, ctx, gout):
        flat, ho, wo, hp, wp, c, h, w = self._geom
        amax = ctx
        n = gout.shape[0]
        k = self.kernel
        if self._tiled:
            z = np.zeros((n, c, ho, wo, k * k), dtype=gout.dtype)
            np.put_along_axis(z, amax[..., None], gout[..., None], axis=-1)
            z = z.reshape(n, c, ho, wo, k, k).transpose(0, 1, 2, 4, 3, 5)
            return np.ascontiguousarray(z).reshape(n, c, h, w)
        g = gout.reshape(n * c, 1, ho * wo)
        z = np.zeros((n * c, self.kernel * self.kernel, ho * wo), dtype=gout.dtype)
        np.put_along_axis(z, amax[:, None, :], g, axis=1)
        gx = _col2im(z, n * c, 1, hp, wp, 0, flat, gout.dtype)
        return gx.reshape(n, c, h, w)

    def spec_line(self):
        return f"max_pool2d k={self.kernel} s={self.stride}"


class Flatten(Layer):
    kind = "flatten"

    def bind(self, in_shape, dtype):
        self._in_shape = tuple(in_shape)
        return (int(np.prod(in_shape)),)

    def forward(self, x, record=False):
        return x.reshape(x.shape[0], -1), None

    def backward_input(self, ctx, gout):
        return gout.reshape((gout.shape[0],) + self._in_shape)

    def spec_line(self):
        return "flatten"


def layer_from_spec(line):
    """Rebuild a layer from its :meth:`spec_line` string."""
    parts = line.split()
    kind, kv = parts[0], dict(p.split("=", 1) for p in parts[1:])
    if kind == "dense":
        return Dense(int(kv["in"]), int(kv["out"]))
    if kind == "conv2d":
        return Conv2d(int(kv["in"]), int(kv["out"]), int(kv["k"]), int(kv["s"]), int(kv["p"]))
    if kind == "conv_transpose2d":
        return ConvTranspose2d(int(kv["in"]), int(kv["out"]), int(kv["k"]), int(kv["s"]), int(kv["p"]))
    if kind == "max_pool2d":
        return MaxPool2d(int(kv["k"]), int(kv["s"]))
    simple = {"relu": ReLU, "sigmoid": Sigmoid, "softmax": Softmax, "flatten": Flatten}
    if kind in simple:
        return simple[kind]()
    raise ShapeError(f"unknown layer kind: {kind}")
