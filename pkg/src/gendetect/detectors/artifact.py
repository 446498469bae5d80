"""Serialization of trained detectors.

A detector artifact is a JSON document carrying the stream configuration,
chosen hyperparameters, standardization statistics, head weights and the
hash of the classifier the detector was trained against.  Loading verifies
that hash against the supplied network and refuses mismatches.
"""

import json
from pathlib import Path

import numpy as np

from ..errors import CheckpointError, NotFittedError
from ..transforms import make_transform
from .git import GitDetector, GranDetector, MultiStreamDetector, StreamSearchResult
from .gradnorm import GradNormDetector
from .heads import LogisticHead
from .mahalanobis import LayerGaussians, MahalanobisDetector

FORMAT_VERSION = "gendetect-det-1"

_MULTISTREAM_KINDS = {
    "git": GitDetector,
    "gran": GranDetector,
    "multistream": MultiStreamDetector,
}


def _detector_kind(detector):
    if isinstance(detector, GitDetector):
        return "git"
    if isinstance(detector, GranDetector):
        return "gran"
    if isinstance(detector, MultiStreamDetector):
        return "multistream"
    if isinstance(detector, GradNormDetector):
        return "gradnorm"
    if isinstance(detector, MahalanobisDetector):
        return "mahalanobis"
    raise TypeError(f"cannot serialize detector of type {type(detector).__name__}")


def _stream_param(transform):
    params = transform.get_params()
    for key in ("sigma", "window", "noise_power"):
        if key in params:
            return params[key]
    return None


def _multistream_state(detector):
    streams = []
    for transform, head in zip(detector.streams_, detector.heads_):
        entry = {
            "kind": transform.kind,
            "param": _stream_param(transform),
            "label": transform.label,
            "head": head.to_state(),
        }
        if transform.kind == "autoencoder":
            entry["autoencoder_hash"] = transform.autoencoder.weights_hash()
        streams.append(entry)
    return {
        "streams": streams,
        "fusion": detector.fusion_.to_state(),
        "scale_by_param_count": detector.scale_by_param_count,
        "batch_size": detector.batch_size,
        "search": [
            {"kind": r.kind, "label": r.label, "val_auroc": r.val_auroc} for r in detector.search_
        ],
    }


def save_detector(detector, path):
    if not detector.is_fitted:
        raise NotFittedError("cannot serialize an unfitted detector")
    kind = _detector_kind(detector)
    doc = {
        "format_version": FORMAT_VERSION,
        "detector_kind": kind,
        "classifier_hash": detector.net.weights_hash(),
    }
    if kind in _MULTISTREAM_KINDS:
        doc.update(_multistream_state(detector))
    elif kind == "gradnorm":
        doc["mode"] = detector.mode
        doc["batch_size"] = detector.batch_size
        doc["head"] = detector.head_.to_state() if detector.head_ is not None else None
    elif kind == "mahalanobis":
        doc.update(
            {
                "eps": detector.eps_,
                "tied": detector.tied,
                "ridge_scale": detector.ridge_scale,
                "num_classes": detector.num_classes,
                "batch_size": detector.batch_size,
                "head": detector.head_.to_state(),
                "layers": [
                    {"means": g.means.tolist(), "cov": g.cov.tolist()} for g in detector.stats_
                ],
            }
        )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


def _restore_multistream(doc, net, autoencoder):
    cls = _MULTISTREAM_KINDS[doc["detector_kind"]]
    det = object.__new__(cls)
    det.net = net
    det.autoencoder = autoencoder
    det.scale_by_param_count = doc["scale_by_param_count"]
    det.batch_size = doc["batch_size"]
    det.stream_kinds = tuple(s["kind"] for s in doc["streams"])
    det.streams_, det.heads_ = [], []
    for entry in doc["streams"]:
        if entry["kind"] == "autoencoder":
            if autoencoder is None:
                raise CheckpointError("artifact uses an autoencoder stream: pass the autoencoder")
            if autoencoder.weights_hash() != entry["autoencoder_hash"]:
                raise CheckpointError("autoencoder hash mismatch: wrong autoencoder for artifact")
        det.streams_.append(make_transform(entry["kind"], entry["param"], autoencoder))
        det.heads_.append(LogisticHead.from_state(entry["head"]))
    det.fusion_ = LogisticHead.from_state(doc["fusion"])
    det.search_ = [
        StreamSearchResult(kind=s["kind"], label=s["label"], val_auroc=s["val_auroc"])
        for s in doc["search"]
    ]
    return det


def load_detector(path, net, autoencoder=None, clean_images=None, clean_labels=None):
    """Rebuild a trained detector; rejects artifacts trained on another net."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"detector artifact not found: {path}")
    doc = json.loads(path.read_text())
    if doc.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"version mismatch: expected {FORMAT_VERSION}, got {doc.get('format_version')!r}"
        )
    if doc["classifier_hash"] != net.weights_hash():
        raise CheckpointError("classifier hash mismatch: artifact was trained on a different network")
    kind = doc["detector_kind"]
    if kind in _MULTISTREAM_KINDS:
        return _restore_multistream(doc, net, autoencoder)
    if kind == "gradnorm":
        det = GradNormDetector(net, mode=doc["mode"], batch_size=doc["batch_size"])
        if doc["head"] is not None:
            det.head_ = LogisticHead.from_state(doc["head"])
        det._fitted = True
        return det
    if kind == "mahalanobis":
        if clean_images is None or clean_labels is None:
            clean_images = np.zeros((0, *net.input_shape), dtype=np.float32)
            clean_labels = np.zeros(0, dtype=np.uint32)
        det = MahalanobisDetector(
            net,
            clean_images,
            clean_labels,
            num_classes=doc["num_classes"],
            ridge_scale=doc["ridge_scale"],
            tied=doc["tied"],
            batch_size=doc["batch_size"],
        )
        det.eps_ = doc["eps"]
        det.head_ = LogisticHead.from_state(doc["head"])
        det.stats_ = [
            LayerGaussians(
                means=np.asarray(layer["means"]),
                cov=np.asarray(layer["cov"]),
                inv=np.linalg.inv(np.asarray(layer["cov"])),
            )
            for layer in doc["layers"]
        ]
        return det
    raise CheckpointError(f"unknown detector kind in artifact: {kind!r}")
