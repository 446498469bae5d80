"""Invariance transformations: identity, Gaussian, Wiener, median, autoencoder.

Each transform maps an image (or batch) to an image of the same shape with
values in [0,1].  A detector stream pairs one of these with gradient feature
extraction; candidate hyperparameter grids for the stream search live here
too.

The filters accumulate tap by tap in float64, in the same scan order a naive
per-pixel loop would use, so their outputs are bit-identical to a direct
O(HW*k^2) reference.
"""

import numpy as np

from .errors import ShapeError
from .validation import check_image_batch

GAUSSIAN_SIGMA_GRID = tuple(round(0.1 * k, 2) for k in range(1, 11))
MEDIAN_WINDOW_GRID = tuple(range(2, 11))
WIENER_NOISE_GRID = tuple(round(0.01 * k, 3) for k in range(1, 11))


def gaussian_kernel_1d(sigma):
    """Normalized discrete Gaussian taps at integer offsets, radius ceil(3*sigma)."""
    if sigma <= 0:
        raise ValueError(f"gaussian sigma must be positive, got {sigma}")
    radius = max(1, int(np.ceil(3.0 * sigma)))
    taps = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(taps**2) / (2.0 * float(sigma) ** 2))
    return k / k.sum()


def _pad_reflect(img, before, after):
    pad = [(0, 0)] * (img.ndim - 2) + [(before, after), (before, after)]
    return np.pad(img, pad, mode="reflect")


def gaussian_filter(img, sigma):
    """Blur with a normalized 2-D Gaussian kernel, reflect padding at borders."""
    img = np.asarray(img)
    k1 = gaussian_kernel_1d(sigma)
    kern = np.outer(k1, k1)
    kern = kern / kern.sum()
    radius = (kern.shape[0] - 1) // 2
    h, w = img.shape[-2:]
    padded = _pad_reflect(img.astype(np.float64), radius, radius)
    out = np.zeros(img.shape, dtype=np.float64)
    for u in range(kern.shape[0]):
        for v in range(kern.shape[1]):
            out += kern[u, v] * padded[..., u : u + h, v : v + w]
    return out.astype(img.dtype, copy=False)


def median_filter(img, window):
    """Sliding square-window median per channel.

    Even windows are anchored top-left of center (reflect padding) and take
    the lower of the two middle order statistics.
    """
    window = int(window)
    if window < 2:
        raise ValueError(f"median window must be at least 2, got {window}")
    img = np.asarray(img)
    before = (window - 1) // 2
    after = window // 2
    padded = _pad_reflect(img.astype(np.float64), before, after)
    win = np.lib.stride_tricks.sliding_window_view(padded, (window, window), axis=(-2, -1))
    flat = win.reshape(win.shape[: img.ndim] + (window * window,))
    out = np.sort(flat, axis=-1)[..., (window * window - 1) // 2]
    return out.astype(img.dtype, copy=False)


def wiener_filter(img, noise_power):
    """Locally adaptive Wiener estimator over 3x3 windows.

    Per pixel with local mean m and variance s^2:
    ``out = m + max(s^2 - v, 0) / max(s^2, v) * (x - m)`` where v is the
    assumed noise power.
    """
    if noise_power <= 0:
        raise ValueError(f"wiener noise power must be positive, got {noise_power}")
    img = np.asarray(img)
    h, w = img.shape[-2:]
    x64 = img.astype(np.float64)
    padded = _pad_reflect(x64, 1, 1)
    mean = np.zeros(img.shape, dtype=np.float64)
    for u in range(3):
        for v in range(3):
            mean += padded[..., u : u + h, v : v + w]
    mean /= 9.0
    var = np.zeros(img.shape, dtype=np.float64)
    for u in range(3):
        for v in range(3):
            var += (padded[..., u : u + h, v : v + w] - mean) ** 2
    var /= 9.0
    gain = np.maximum(var - noise_power, 0.0) / np.maximum(var, noise_power)
    out = mean + gain * (x64 - mean)
    return out.astype(img.dtype, copy=False)


class StreamTransform:
    """Base class: shape-preserving, deterministic, [0,1] -> [0,1]."""

    kind = "stream"

    def _apply(self, images):
        raise NotImplementedError

    def transform(self, images):
        images = check_image_batch(images) if np.asarray(images).ndim != 3 else np.asarray(images)
        out = self._apply(images)
        if out.shape != images.shape:
            raise ShapeError(f"transform changed shape {images.shape} -> {out.shape}")
        return np.clip(out, 0.0, 1.0)

    def __call__(self, images):
        return self.transform(images)

    def get_params(self):
        return {}

    @property
    def label(self):
        params = self.get_params()
        if not params:
            return self.kind
        inner = ",".join(f"{k}={v}" for k, v in params.items())
        return f"{self.kind}({inner})"

    def __repr__(self):
        return f"{type(self).__name__}({self.get_params()})"


class IdentityTransform(StreamTransform):
    kind = "identity"

    def transform(self, images):
        # bit-exact passthrough, no clip
        return np.asarray(images)


class GaussianTransform(StreamTransform):
    kind = "gaussian"

    def __init__(self, sigma):
        if sigma <= 0:
            raise ValueError(f"gaussian sigma must be positive, got {sigma}")
        self.sigma = float(sigma)

    def _apply(self, images):
        return gaussian_filter(images, self.sigma)

    def get_params(self):
        return {"sigma": self.sigma}


class MedianTransform(StreamTransform):
    kind = "median"

    def __init__(self, window):
        if int(window) < 2:
            raise ValueError(f"median window must be at least 2, got {window}")
        self.window = int(window)

    def _apply(self, images):
        return median_filter(images, self.window)

    def get_params(self):
        return {"window": self.window}


class WienerTransform(StreamTransform):
    kind = "wiener"

    def __init__(self, noise_power):
        if noise_power <= 0:
            raise ValueError(f"wiener noise power must be positive, got {noise_power}")
        self.noise_power = float(noise_power)

    def _apply(self, images):
        return wiener_filter(images, self.noise_power)

    def get_params(self):
        return {"noise_power": self.noise_power}


class AutoencoderTransform(StreamTransform):
    """Reconstruction through a trained autoencoder network."""

    kind = "autoencoder"

    def __init__(self, autoencoder):
        if tuple(autoencoder.output_shape) != tuple(autoencoder.input_shape):
            raise ShapeError(
                f"autoencoder output {autoencoder.output_shape} != input {autoencoder.input_shape}"
            )
        self.autoencoder = autoencoder

    def _apply(self, images):
        single = images.ndim == 3
        batch = images[None] if single else images
        out = self.autoencoder.forward(batch).astype(batch.dtype, copy=False)
        return out[0] if single else out

    def get_params(self):
        return {"autoencoder": self.autoencoder.weights_hash()[:12]}


def stream_candidates(kind, autoencoder=None):
    """All candidate transforms for one stream kind, in grid order."""
    if kind == "identity":
        return [IdentityTransform()]
    if kind == "gaussian":
        return [GaussianTransform(s) for s in GAUSSIAN_SIGMA_GRID]
    if kind == "median":
        return [MedianTransform(w) for w in MEDIAN_WINDOW_GRID]
    if kind == "wiener":
        return [WienerTransform(v) for v in WIENER_NOISE_GRID]
    if kind == "autoencoder":
        if autoencoder is None:
            raise ValueError("autoencoder stream requested but no autoencoder supplied")
        return [AutoencoderTransform(autoencoder)]
    raise ValueError(f"unknown stream kind: {kind}")


def make_transform(kind, param=None, autoencoder=None):
    """Build one concrete transform from (kind, hyperparameter)."""
    if kind == "identity":
        return IdentityTransform()
    if kind == "gaussian":
        return GaussianTransform(param)
    if kind == "median":
        return MedianTransform(param)
    if kind == "wiener":
        return WienerTransform(param)
    if kind == "autoencoder":
        if autoencoder is None:
            raise ValueError("autoencoder stream requested but no autoencoder supplied")
        return AutoencoderTransform(autoencoder)
    raise ValueError(f"unknown stream kind: {kind}")
