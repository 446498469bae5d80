"""On-disk dataset container.

A dataset is a directory holding ``meta.json`` plus two raw payloads:
``images.bin`` (little-endian float32, N*C*H*W, row-major, values in [0,1])
and ``labels.bin`` (little-endian uint32, length N).  Every container that
passes :func:`load_dataset` validation is safe for all other modules.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DatasetFormatError

FORMAT_VERSION = "gendetect-ds-1"
META_FILE = "meta.json"
IMAGES_FILE = "images.bin"
LABELS_FILE = "labels.bin"


@dataclass
class DatasetContainer:
    """In-memory dataset: float32 images in [0,1] plus integer labels."""

    name: str
    images: np.ndarray  # (N, C, H, W) float32
    labels: np.ndarray  # (N,) uint32
    class_count: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.images = np.ascontiguousarray(self.images, dtype=np.float32)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.uint32)
        validate_container(self)

    def __len__(self):
        return self.images.shape[0]

    @property
    def shape(self):
        return tuple(self.images.shape[1:])

    def subset(self, indices, name=None):
        return DatasetContainer(
            name=name or self.name,
            images=self.images[indices],
            labels=self.labels[indices],
            class_count=self.class_count,
            meta=dict(self.meta),
        )


def validate_container(ds):
    if ds.images.ndim != 4:
        raise DatasetFormatError(f"size mismatch: images must be N,C,H,W, got {ds.images.shape}")
    if ds.labels.ndim != 1 or ds.labels.shape[0] != ds.images.shape[0]:
        raise DatasetFormatError(
            f"size mismatch: {ds.labels.shape[0]} labels for {ds.images.shape[0]} images"
        )
    if ds.class_count < 1:
        raise DatasetFormatError(f"class count must be positive, got {ds.class_count}")
    if ds.labels.size and int(ds.labels.max()) >= ds.class_count:
        raise DatasetFormatError(
            f"label overflow: max label {int(ds.labels.max())} >= class count {ds.class_count}"
        )
    if ds.images.size and (float(ds.images.min()) < 0.0 or float(ds.images.max()) > 1.0):
        raise DatasetFormatError(
            f"pixel range: values must lie in [0,1], found "
            f"[{float(ds.images.min()):.4g}, {float(ds.images.max()):.4g}]"
        )


def save_dataset(ds, path):
    """Write the container to ``path`` (a directory, created if needed)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    n, c, h, w = ds.images.shape
    meta = {
        "format_version": FORMAT_VERSION,
        "name": ds.name,
        "width": w,
        "height": h,
        "channels": c,
        "class_count": int(ds.class_count),
        "sample_count": n,
    }
    meta.update({k: v for k, v in ds.meta.items() if k not in meta})
    (path / META_FILE).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    (path / IMAGES_FILE).write_bytes(ds.images.astype("<f4").tobytes())
    (path / LABELS_FILE).write_bytes(ds.labels.astype("<u4").tobytes())
    return path


def load_dataset(path):
    """Load and strictly validate a container directory."""
    path = Path(path)
    meta_path = path / META_FILE
    if not meta_path.exists():
        raise DatasetFormatError(f"missing metadata file: {meta_path}")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"corrupt metadata file: {exc}") from exc
    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise DatasetFormatError(f"version mismatch: expected {FORMAT_VERSION}, got {version!r}")
    for key in ("name", "width", "height", "channels", "class_count", "sample_count"):
        if key not in meta:
            raise DatasetFormatError(f"metadata missing field: {key}")
    n, c, h, w = (int(meta[k]) for k in ("sample_count", "channels", "height", "width"))
    raw_images = (path / IMAGES_FILE).read_bytes()
    if len(raw_images) != n * c * h * w * 4:
        raise DatasetFormatError(
            f"image payload length: expected {n * c * h * w * 4} bytes, got {len(raw_images)}"
        )
    raw_labels = (path / LABELS_FILE).read_bytes()
    if len(raw_labels) != n * 4:
        raise DatasetFormatError(
            f"label payload length: expected {n * 4} bytes, got {len(raw_labels)}"
        )
    images = np.frombuffer(raw_images, dtype="<f4").reshape(n, c, h, w)
    labels = np.frombuffer(raw_labels, dtype="<u4")
    extra = {k: v for k, v in meta.items() if k not in
             ("format_version", "name", "width", "height", "channels", "class_count", "sample_count")}
    return DatasetContainer(
        name=meta["name"],
        images=images.copy(),
        labels=labels.copy(),
        class_count=int(meta["class_count"]),
        meta=extra,
    )
