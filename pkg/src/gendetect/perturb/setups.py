"""Perturbation setup construction and persistence.

A setup is a labeled collection of images: label 1 marks a misclassified or
out-of-distribution sample, label 0 a correctly classified one.  Noise and
sign-step attack setups are calibrated so that about half of the images are
misclassified; the calibration runs over all provided test images with the
same per-sample random streams used for the final build, so the achieved
rate equals the setup's positive fraction exactly.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..data import DatasetContainer, load_dataset, save_dataset
from ..gradfeat import predict_classes
from ..rng import stream_rng
from ..validation import check_image_batch
from .calibrate import calibrate_severity, get_family

PUNC_KINDS = ("original", "gaussian", "shot", "impulse")
ADV_KINDS = ("fgsm", "bim", "deepfool", "cwl2")
PROVENANCE_FILE = "provenance.json"


@dataclass
class PerturbationSetup:
    name: str
    images: np.ndarray
    labels: np.ndarray  # 1 = misclassified or OOD, 0 = correctly classified
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.images = check_image_batch(self.images)
        self.labels = np.asarray(self.labels, dtype=np.uint32)
        if len(self.labels) != len(self.images):
            raise ValueError("setup images and labels disagree in length")
        if self.labels.size == 0 or self.labels.min() == self.labels.max():
            raise ValueError(f"setup {self.name!r} needs both positive and negative samples")

    def __len__(self):
        return len(self.images)

    @property
    def positive_fraction(self):
        return float(self.labels.mean())

    def subset(self, indices, split_name=None):
        prov = dict(self.provenance)
        if split_name:
            prov["split"] = split_name
        sub = object.__new__(PerturbationSetup)
        sub.name = self.name
        sub.images = self.images[indices]
        sub.labels = self.labels[indices]
        sub.provenance = prov
        return sub


def _predictions(net, images):
    return predict_classes(net, images)


def build_punc_setup(net, test_images, test_labels, kind, seed=0, target=0.5, tol=0.03,
                     name=None, classifier_hash=None):
    """Predictive-uncertainty setups.

    ``original``: every misclassified clean image plus an equal count of
    randomly chosen correctly classified ones.  Noise kinds: every test
    image perturbed at calibrated severity, labeled by correctness.
    """
    if kind not in PUNC_KINDS:
        raise ValueError(f"unknown predictive-uncertainty setup kind: {kind!r}")
    test_images = check_image_batch(test_images)
    test_labels = np.asarray(test_labels)
    name = name or kind
    if kind == "original":
        classes = _predictions(net, test_images)
        wrong = np.flatnonzero(classes != test_labels)
        right = np.flatnonzero(classes == test_labels)
        if len(wrong) == 0:
            raise ValueError("original setup impossible: classifier makes no mistakes on this data")
        if len(right) == 0:
            raise ValueError("original setup impossible: classifier gets nothing right")
        n = min(len(wrong), len(right))
        rng = stream_rng(seed, "setup", name, "balance")
        wrong = wrong if len(wrong) == n else rng.choice(wrong, size=n, replace=False)
        right = rng.choice(right, size=n, replace=False)
        idx = np.concatenate([wrong, right])
        images = test_images[idx]
        labels = np.concatenate([np.ones(n, dtype=np.uint32), np.zeros(n, dtype=np.uint32)])
        provenance = {
            "kind": kind, "severity": 0.0, "achieved_rate": 0.5, "seed": seed,
            "true_classes": test_labels[idx].astype(int).tolist(),
        }
    else:
        family = get_family(kind)
        calib = calibrate_severity(
            net, test_images, test_labels, family,
            target=target, tol=tol, seed=seed, tag=f"setup:{name}",
        )
        images = family.apply(net, test_images, test_labels, calib.severity, seed, f"setup:{name}")
        classes = _predictions(net, images)
        labels = (classes != test_labels).astype(np.uint32)
        provenance = {
            "kind": kind, "severity": calib.severity, "achieved_rate": calib.achieved_rate,
            "clean_rate": calib.clean_rate, "calibration_iterations": calib.iterations,
            "target": target, "tol": tol, "seed": seed,
            "true_classes": test_labels.astype(int).tolist(),
        }
    if classifier_hash:
        provenance["classifier_hash"] = classifier_hash
    return PerturbationSetup(name=name, images=images, labels=labels, provenance=provenance)


def _attack_random_half(net, test_images, test_labels, kind, seed, name):
    """Minimal-norm attacks have no severity knob to calibrate: attacking
    every image would misclassify nearly all of them, so a random half is
    attacked and the other half stays clean."""
    from .attacks import cwl2, deepfool

    rng = stream_rng(seed, "setup", name, "half")
    n = len(test_images)
    attacked_idx = np.sort(rng.choice(n, size=n // 2, replace=False))
    images = test_images.copy()
    if kind == "cwl2":
        images[attacked_idx] = cwl2(net, test_images[attacked_idx], test_labels[attacked_idx])
    else:
        for i in attacked_idx:
            images[i], _ = deepfool(net, test_images[i])
    return images, attacked_idx


def build_adv_setup(net, test_images, test_labels, kind, seed=0, target=0.5, tol=0.03,
                    name=None, classifier_hash=None):
    """Attack every test image at calibrated severity; label by correctness.

    Attacked images that remain correctly classified stay in the negative
    class rather than being discarded.  The minimal-norm attacks (deepfool,
    cwl2) are calibration-free and attack a random half of the images
    instead.
    """
    if kind not in ADV_KINDS:
        raise ValueError(f"unknown adversarial setup kind: {kind!r}")
    test_images = check_image_batch(test_images)
    test_labels = np.asarray(test_labels)
    name = name or kind
    if kind in ("deepfool", "cwl2"):
        images, attacked_idx = _attack_random_half(net, test_images, test_labels, kind, seed, name)
        labels = (_predictions(net, images) != test_labels).astype(np.uint32)
        provenance = {
            "kind": kind, "severity": None,
            "achieved_rate": float(labels.mean()),
            "attacked_count": int(len(attacked_idx)),
            "seed": seed, "true_classes": test_labels.astype(int).tolist(),
        }
    else:
        family = get_family(kind)
        calib = calibrate_severity(
            net, test_images, test_labels, family,
            target=target, tol=tol, seed=seed, tag=f"setup:{name}",
        )
        images = family.apply(net, test_images, test_labels, calib.severity, seed, f"setup:{name}")
        labels = (_predictions(net, images) != test_labels).astype(np.uint32)
        provenance = {
            "kind": kind, "severity": calib.severity, "achieved_rate": calib.achieved_rate,
            "clean_rate": calib.clean_rate, "calibration_iterations": calib.iterations,
            "target": target, "tol": tol, "seed": seed,
            "true_classes": test_labels.astype(int).tolist(),
        }
    if classifier_hash:
        provenance["classifier_hash"] = classifier_hash
    return PerturbationSetup(name=name, images=images, labels=labels, provenance=provenance)


def build_ood_setup(net, test_images, test_labels, ood_images, seed=0, name="ood",
                    classifier_hash=None):
    """All out-of-distribution images (label 1) plus an equal count of
    correctly classified in-distribution test images (label 0)."""
    test_images = check_image_batch(test_images)
    ood_images = check_image_batch(ood_images)
    classes = _predictions(net, test_images)
    right = np.flatnonzero(classes == np.asarray(test_labels))
    if len(right) == 0:
        raise ValueError("ood setup impossible: no correctly classified in-distribution images")
    if len(ood_images) == 0:
        raise ValueError("ood setup impossible: no out-of-distribution images")
    n = min(len(ood_images), len(right))
    rng = stream_rng(seed, "setup", name, "balance")
    ood_idx = np.arange(len(ood_images)) if len(ood_images) == n else rng.choice(len(ood_images), size=n, replace=False)
    right = right if len(right) == n else rng.choice(right, size=n, replace=False)
    images = np.concatenate([ood_images[ood_idx], test_images[right]])
    labels = np.concatenate([np.ones(n, dtype=np.uint32), np.zeros(n, dtype=np.uint32)])
    provenance = {"kind": "ood", "severity": 0.0, "achieved_rate": 0.5, "seed": seed}
    if classifier_hash:
        provenance["classifier_hash"] = classifier_hash
    return PerturbationSetup(name=name, images=images, labels=labels, provenance=provenance)


def save_setup(setup, path):
    """Store as a binary-labeled dataset container plus a provenance sidecar."""
    path = Path(path)
    container = DatasetContainer(
        name=setup.name, images=setup.images, labels=setup.labels, class_count=2
    )
    save_dataset(container, path)
    (path / PROVENANCE_FILE).write_text(json.dumps(setup.provenance, indent=1, sort_keys=True) + "\n")
    return path


def load_setup(path):
    path = Path(path)
    container = load_dataset(path)
    prov_path = path / PROVENANCE_FILE
    provenance = json.loads(prov_path.read_text()) if prov_path.exists() else {}
    return PerturbationSetup(
        name=container.name, images=container.images, labels=container.labels,
        provenance=provenance,
    )
