"""Distance-based baseline: class-conditional Gaussians over layer features.

Layer features are the spatial means of each parameterized layer's output
(a channel vector).  Per layer the score of a sample is the best (largest)
negated Mahalanobis distance over the class means; the per-layer scores are
combined by a logistic head trained on perturbation-setup data, after a
sign-gradient input shift whose magnitude is grid-searched on validation
AUROC.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import GendetectError, NotFittedError
from ..evaluation.metrics import auroc
from ..validation import check_image_batch
from .git import setup_xy
from .heads import LogisticHead

log = logging.getLogger("gendetect")

SHIFT_EPS_GRID = (0.0, 0.0005, 0.001, 0.002, 0.005, 0.01, 0.05, 0.1)


def layer_feature_vectors(net, images, batch_size=128):
    """Spatial mean of every parameterized layer's activation, per sample.

    Returns a list (one per weight-carrying layer) of (n, channels) arrays.
    """
    images = check_image_batch(images)
    collected = None
    for start in range(0, len(images), batch_size):
        h = images[start : start + batch_size].astype(net.dtype, copy=False)
        feats = []
        for layer in net.layers:
            h, _ = layer.forward(h, record=False)
            if layer.has_params:
                feats.append(h.mean(axis=(2, 3)) if h.ndim == 4 else h.copy())
        if collected is None:
            collected = [[f] for f in feats]
        else:
            for acc, f in zip(collected, feats):
                acc.append(f)
    return [np.concatenate(acc).astype(np.float64) for acc in collected]


@dataclass
class LayerGaussians:
    means: np.ndarray  # (num_classes, dim)
    cov: np.ndarray  # (dim, dim), ridge included
    inv: np.ndarray  # precomputed inverse


def _ridge_covariance(centered, dim, ridge_scale):
    cov = centered.T @ centered / len(centered)
    ridge = ridge_scale * np.trace(cov) / dim
    cov = cov + ridge * np.eye(dim)
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise GendetectError("singular covariance despite ridge") from exc
    return cov


def mahalanobis_fit(net, clean_images, clean_labels, num_classes, ridge_scale=1e-3, tied=True, batch_size=128):
    """Per-layer class means plus a tied (or per-class) ridge covariance."""
    feats = layer_feature_vectors(net, clean_images, batch_size=batch_size)
    labels = np.asarray(clean_labels)
    stats = []
    for f in feats:
        dim = f.shape[1]
        means = np.stack([f[labels == c].mean(axis=0) for c in range(num_classes)])
        centered = f - means[labels]
        if tied:
            cov = _ridge_covariance(centered, dim, ridge_scale)
            stats.append(LayerGaussians(means=means, cov=cov, inv=np.linalg.inv(cov)))
        else:
            covs = []
            for c in range(num_classes):
                covs.append(_ridge_covariance(centered[labels == c], dim, ridge_scale))
            cov = np.stack(covs)
            stats.append(LayerGaussians(means=means, cov=cov, inv=np.linalg.inv(cov)))
    return stats


def mahalanobis_layer_scores(stats, feats):
    """(n, L) matrix: per layer, max over classes of the negated distance."""
    cols = []
    for gauss, f in zip(stats, feats):
        d = f[:, None, :] - gauss.means[None, :, :]
        if gauss.inv.ndim == 2:
            q = np.einsum("ncd,de,nce->nc", d, gauss.inv, d)
        else:
            q = np.einsum("ncd,cde,nce->nc", d, gauss.inv, d)
        cols.append(-q.min(axis=1))
    return np.column_stack(cols)


class MahalanobisDetector:
    """Gaussians from clean training data + setup-trained logistic head."""

    def __init__(self, net, clean_images, clean_labels, num_classes=None,
                 ridge_scale=1e-3, tied=True, eps_grid=SHIFT_EPS_GRID, batch_size=128):
        self.net = net
        self.clean_images = check_image_batch(clean_images)
        self.clean_labels = np.asarray(clean_labels)
        self.num_classes = int(num_classes if num_classes is not None else net.output_shape[0])
        self.ridge_scale = ridge_scale
        self.tied = tied
        self.eps_grid = tuple(eps_grid)
        self.batch_size = batch_size
        self.stats_ = None
        self.eps_ = None
        self.head_ = None

    def get_params(self):
        return {
            "num_classes": self.num_classes,
            "ridge_scale": self.ridge_scale,
            "tied": self.tied,
            "eps_grid": self.eps_grid,
            "batch_size": self.batch_size,
        }

    @property
    def is_fitted(self):
        return self.head_ is not None

    def _ensure_stats(self):
        if self.stats_ is None:
            self.stats_ = mahalanobis_fit(
                self.net, self.clean_images, self.clean_labels, self.num_classes,
                ridge_scale=self.ridge_scale, tied=self.tied, batch_size=self.batch_size,
            )
        return self.stats_

    def _scores_at(self, images, eps, direction=None):
        if eps == 0:
            shifted = images
        else:
            shifted = np.clip(images - eps * direction, 0.0, 1.0)
        feats = layer_feature_vectors(self.net, shifted, batch_size=self.batch_size)
        return mahalanobis_layer_scores(self._ensure_stats(), feats)

    def fit(self, train_setup, val_setup):
        from .odin import input_shift_direction

        x_train, y_train = setup_xy(train_setup)
        x_val, y_val = setup_xy(val_setup)
        self._ensure_stats()
        dir_train = input_shift_direction(self.net, x_train, batch_size=self.batch_size)
        dir_val = input_shift_direction(self.net, x_val, batch_size=self.batch_size)
        best = None
        for eps in self.eps_grid:
            head = LogisticHead().fit(self._scores_at(x_train, eps, dir_train), y_train)
            score = auroc(head.predict_proba(self._scores_at(x_val, eps, dir_val)), y_val)
            log.debug("mahalanobis eps %-8g val auroc %.4f", eps, score)
            if best is None or score > best[0]:
                best = (score, eps, head)
        _, self.eps_, self.head_ = best
        return self

    def layer_scores(self, images):
        """Per-layer scores at the chosen shift magnitude (all <= 0)."""
        images = check_image_batch(images)
        if self.eps_ in (None, 0.0) or self.eps_ == 0:
            return self._scores_at(images, 0.0)
        from .odin import input_shift_direction

        direction = input_shift_direction(self.net, images, batch_size=self.batch_size)
        return self._scores_at(images, self.eps_, direction)

    def score_samples(self, images):
        if not self.is_fitted:
            raise NotFittedError("mahalanobis detector used before fit")
        return self.head_.predict_proba(self.layer_scores(images))
