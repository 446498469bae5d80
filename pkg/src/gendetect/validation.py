"""Input validation helpers shared by the estimator-style classes."""

import numpy as np

from .errors import ShapeError


def check_image_batch(images, channels=None, size=None) -> np.ndarray:
    """Validate an (N,C,H,W) float image batch; promote a single (C,H,W) image.

    Returns the array unchanged apart from the optional leading-axis
    promotion; never copies pixel data.
    """
    arr = np.asarray(images)
    if arr.ndim == 3:
        arr = arr[None]
    if arr.ndim != 4:
        raise ShapeError(f"expected image batch of rank 3 or 4, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.floating):
        raise ShapeError(f"images must be floating point, got dtype {arr.dtype}")
    if channels is not None and arr.shape[1] != channels:
        raise ShapeError(f"expected {channels} channels, got {arr.shape[1]}")
    if size is not None and arr.shape[2:] != tuple(size):
        raise ShapeError(f"expected spatial size {tuple(size)}, got {arr.shape[2:]}")
    return arr


def check_binary_labels(labels, n=None) -> np.ndarray:
    """Validate a vector of 0/1 labels."""
    y = np.asarray(labels)
    if y.ndim != 1:
        raise ShapeError(f"labels must be 1-D, got shape {y.shape}")
    if n is not None and y.shape[0] != n:
        raise ShapeError(f"expected {n} labels, got {y.shape[0]}")
    vals = np.unique(y)
    if not np.all(np.isin(vals, (0, 1))):
        raise ValueError(f"labels must be binary 0/1, found values {vals}")
    return y.astype(np.int64)


def check_feature_matrix(X, y=None):
    """Validate a 2-D feature matrix with finite entries (and matching labels)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"features must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain non-finite values")
    if y is not None:
        y = check_binary_labels(y, n=X.shape[0])
        return X, y
    return X
