"""Synthetic desk-scale datasets.

Two disjoint families: ``shapes-v1`` renders a filled shape (circle, square,
triangle, cross) at random position, scale and rotation; ``textures-v1``
fills the frame with a periodic pattern (stripes, checkerboard, dots) and
serves as the out-of-distribution family.  Colors sit near the black/white
poles per channel so that pixel-level binary cross-entropy stays meaningful
for the autoencoder stream.

Each sample draws from its own counter-based random stream, so generation is
reproducible and independent of ordering.
"""

from dataclasses import dataclass

import numpy as np

from ..rng import stream_rng
from .container import DatasetContainer

SHAPES_CLASSES = ("circle", "square", "triangle", "cross")
TEXTURES_CLASSES = ("stripes", "checkerboard", "dots")

FAMILIES = {
    "shapes-v1": SHAPES_CLASSES,
    "textures-v1": TEXTURES_CLASSES,
}


@dataclass
class SyntheticSpec:
    family: str
    count: int
    size: int = 32
    seed: int = 0
    noise: float = 0.06

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown synthetic family: {self.family}")
        if self.count < 1:
            raise ValueError("count must be positive")
        if self.size < 8:
            raise ValueError("size must be at least 8")

    @property
    def class_count(self):
        return len(FAMILIES[self.family])


def _pole_colors(rng, per_channel=False):
    """Background near one intensity pole, foreground near the other.

    Shapes share one dark-or-bright background choice across channels (the
    contrast sign is consistent, which keeps the task learnable); textures
    flip the pole per channel, giving color statistics the classifier never
    saw and keeping the out-of-distribution task non-degenerate.
    """
    if per_channel:
        dark_bg = rng.random(3) < 0.5
        bg = np.where(dark_bg, rng.uniform(0.02, 0.10, 3), rng.uniform(0.90, 0.98, 3))
        fg = np.where(dark_bg, rng.uniform(0.70, 0.98, 3), rng.uniform(0.02, 0.30, 3))
        return bg, fg
    if rng.random() < 0.5:
        return rng.uniform(0.02, 0.10, 3), rng.uniform(0.70, 0.98, 3)
    return rng.uniform(0.90, 0.98, 3), rng.uniform(0.02, 0.30, 3)


def _coordinate_grid(size):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) + 0.5
    return xx, yy


def _shape_alpha(kind, size, rng):
    """Soft-edged coverage mask of the shape in [0,1]."""
    xx, yy = _coordinate_grid(size)
    cx = rng.uniform(0.30 * size, 0.70 * size)
    cy = rng.uniform(0.30 * size, 0.70 * size)
    scale = rng.uniform(0.16, 0.28) * size
    angle = rng.uniform(0.0, 2.0 * np.pi)
    ca, sa = np.cos(angle), np.sin(angle)
    u = ((xx - cx) * ca + (yy - cy) * sa) / scale
    v = (-(xx - cx) * sa + (yy - cy) * ca) / scale

    if kind == "circle":
        sdf = np.sqrt(u * u + v * v) - 1.0
    elif kind == "square":
        sdf = np.maximum(np.abs(u), np.abs(v)) - 0.82
    elif kind == "triangle":
        # equilateral, circumradius 1: outward edge normals at 270/30/150 deg
        sdf = -np.inf * np.ones_like(u)
        for phi in (3 * np.pi / 2, np.pi / 6, 5 * np.pi / 6):
            sdf = np.maximum(sdf, u * np.cos(phi) + v * np.sin(phi) - 0.5)
    elif kind == "cross":
        bar1 = np.maximum(np.abs(u) - 0.32, np.abs(v) - 1.0)
        bar2 = np.maximum(np.abs(v) - 0.32, np.abs(u) - 1.0)
        sdf = np.minimum(bar1, bar2)
    else:
        raise ValueError(f"unknown shape: {kind}")
    return np.clip(0.5 - sdf * scale, 0.0, 1.0)


def _texture_field(kind, size, rng):
    """Periodic pattern field in [0,1] covering the whole frame."""
    xx, yy = _coordinate_grid(size)
    angle = rng.uniform(0.0, 2.0 * np.pi)
    ca, sa = np.cos(angle), np.sin(angle)
    period = rng.uniform(5.0, 11.0)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    u = xx * ca + yy * sa
    v = -xx * sa + yy * ca

    if kind == "stripes":
        field = 0.5 + 0.5 * np.sin(2.0 * np.pi * u / period + phase)
    elif kind == "checkerboard":
        field = (
            0.5
            + 0.5 * np.sin(2.0 * np.pi * u / period + phase)
            * np.sin(2.0 * np.pi * v / period + phase)
        )
    elif kind == "dots":
        du = (u / period + phase) % 1.0 - 0.5
        dv = (v / period + phase) % 1.0 - 0.5
        dist = np.sqrt(du * du + dv * dv) * period
        field = np.clip(0.30 * period - dist + 0.5, 0.0, 1.0)
    else:
        raise ValueError(f"unknown texture: {kind}")
    # sharpen toward the poles so pixel entropies stay low
    return np.clip(0.5 + (field - 0.5) * 3.0, 0.0, 1.0)


def _render(spec, label, rng):
    names = FAMILIES[spec.family]
    kind = names[label]
    bg, fg = _pole_colors(rng, per_channel=spec.family == "textures-v1")
    if spec.family == "shapes-v1":
        alpha = _shape_alpha(kind, spec.size, rng)
    else:
        # muted pattern contrast keeps the classifier's confidence on
        # out-of-distribution inputs away from saturation, so gradient
        # signatures stay informative
        fg = bg + 0.35 * (fg - bg)
        alpha = _texture_field(kind, spec.size, rng)
    img = bg[:, None, None] + alpha[None] * (fg - bg)[:, None, None]
    img = img + rng.normal(0.0, spec.noise, img.shape)
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def generate_synthetic(spec):
    """Render a balanced, seed-reproducible dataset for the given spec."""
    k = spec.class_count
    labels = np.arange(spec.count, dtype=np.uint32) % k
    images = np.empty((spec.count, 3, spec.size, spec.size), dtype=np.float32)
    for i in range(spec.count):
        rng = stream_rng(spec.seed, spec.family, i)
        images[i] = _render(spec, int(labels[i]), rng)
    return DatasetContainer(
        name=spec.family,
        images=images,
        labels=labels,
        class_count=k,
        meta={"seed": spec.seed, "noise": spec.noise, "family": spec.family},
    )
