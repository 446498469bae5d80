"""Sensor-noise corruptions: additive Gaussian, Poisson shot, impulse."""

import numpy as np


def gaussian_noise(img, std, rng):
    """Add i.i.d. zero-mean Gaussian noise per element, clip to [0,1]."""
    if std < 0:
        raise ValueError(f"noise std must be non-negative, got {std}")
    img = np.asarray(img)
    out = img + rng.normal(0.0, std, img.shape)
    return np.clip(out, 0.0, 1.0).astype(img.dtype, copy=False)


def shot_noise(img, factor, rng):
    """Poisson photon-count noise: clip(Poisson(x * f) / f).

    Larger factors mean weaker noise; the per-element expectation before
    clipping equals the input.
    """
    if factor <= 0:
        raise ValueError(f"shot factor must be positive, got {factor}")
    img = np.asarray(img)
    out = rng.poisson(np.asarray(img, dtype=np.float64) * factor) / factor
    return np.clip(out, 0.0, 1.0).astype(img.dtype, copy=False)


def impulse_noise(img, prob, rng):
    """Replace each element with probability ``prob`` by a fair 0/1 coin."""
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"impulse probability must be in [0,1], got {prob}")
    img = np.asarray(img)
    mask = rng.random(img.shape) < prob
    coins = rng.integers(0, 2, img.shape).astype(img.dtype)
    return np.where(mask, coins, img)
