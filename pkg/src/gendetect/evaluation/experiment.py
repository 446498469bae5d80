"""End-to-end experiment: data, classifier, setups, detectors, evaluation.

The whole run is a pure function of (config, seed): every random draw comes
from named streams fanned out from the experiment seed, so two runs of the
same config produce identical reports.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..data import SyntheticSpec, generate_synthetic, load_dataset
from ..errors import ConfigError
from ..models import AutoencoderConfig, ClassifierConfig, train_autoencoder, train_classifier
from ..perturb import build_adv_setup, build_ood_setup, build_punc_setup
from ..rng import stream_rng
from .metrics import auroc, roc_points, tnr_at_tpr
from .splits import split_dataset, split_indices

log = logging.getLogger("gendetect")

PUNC_SETUP_KINDS = ("original", "gaussian", "shot", "impulse")
ADV_SETUP_KINDS = ("fgsm", "bim", "deepfool", "cwl2")
SETUP_KINDS = PUNC_SETUP_KINDS + ADV_SETUP_KINDS + ("ood",)
DETECTOR_NAMES = ("git", "gran", "gradnorm", "gradnorm-all", "mahalanobis")
STREAM_KINDS = ("identity", "gaussian", "wiener", "median", "autoencoder")


@dataclass
class SetupSpec:
    name: str
    kind: str
    target: float = 0.5
    tol: float = 0.03

    def __post_init__(self):
        if self.kind not in SETUP_KINDS:
            raise ConfigError(f"unknown setup kind: {self.kind!r}")


@dataclass
class ExperimentConfig:
    seed: int = 0
    out_dir: str = "out"
    train_data: dict = field(default_factory=lambda: {"family": "shapes-v1", "count": 2000})
    test_data: dict = field(default_factory=lambda: {"family": "shapes-v1", "count": 1000})
    ood_data: dict | None = field(default_factory=lambda: {"family": "textures-v1", "count": 400})
    classifier: dict = field(default_factory=dict)
    autoencoder: dict = field(default_factory=dict)
    streams: tuple = ("identity", "gaussian", "wiener", "median", "autoencoder")
    detectors: tuple = ("git", "gran", "gradnorm", "gradnorm-all", "mahalanobis")
    setups: tuple = ()
    seen: str = "fgsm"

    def __post_init__(self):
        self.streams = tuple(self.streams)
        self.detectors = tuple(self.detectors)
        self.setups = tuple(
            s if isinstance(s, SetupSpec) else SetupSpec(**s) for s in self.setups
        )
        names = [s.name for s in self.setups]
        if len(set(names)) != len(names):
            raise ConfigError(f"setup names must be unique, got {names}")
        for d in self.detectors:
            if d not in DETECTOR_NAMES:
                raise ConfigError(f"unknown detector: {d!r} (have {DETECTOR_NAMES})")
        for s in self.streams:
            if s not in STREAM_KINDS:
                raise ConfigError(f"unknown stream kind: {s!r} (have {STREAM_KINDS})")
        if self.seen != "all" and self.seen not in names:
            raise ConfigError(f"seen setup {self.seen!r} does not reference a configured setup")
        if any(s.kind == "ood" for s in self.setups) and self.ood_data is None:
            raise ConfigError("an ood setup is configured but no ood data is given")

    @classmethod
    def from_dict(cls, doc):
        known = {
            "seed", "out_dir", "train_data", "test_data", "ood_data",
            "classifier", "autoencoder", "streams", "detectors", "setups", "seen",
        }
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**doc)


@dataclass
class EvalRow:
    setup: str
    detector: str
    auroc: float
    tnr95: float
    n: int
    seen: bool
    roc: list = field(default_factory=list)


@dataclass
class EvalReport:
    rows: list
    seed: int
    meta: dict = field(default_factory=dict)

    def row(self, setup, detector):
        for r in self.rows:
            if r.setup == setup and r.detector == detector:
                return r
        raise KeyError(f"no row for setup={setup!r} detector={detector!r}")


@dataclass
class ExperimentArtifacts:
    classifier: object = None
    classifier_report: object = None
    autoencoder: object = None
    setups: dict = field(default_factory=dict)
    splits: dict = field(default_factory=dict)
    detectors: dict = field(default_factory=dict)
    datasets: dict = field(default_factory=dict)


def child_seed(seed, *path):
    return int(stream_rng(seed, *path).integers(2**31))


def resolve_data(block, default_seed, tag):
    if block is None:
        return None
    if "path" in block:
        return load_dataset(block["path"])
    spec = SyntheticSpec(
        family=block["family"],
        count=int(block["count"]),
        size=int(block.get("size", 32)),
        noise=float(block.get("noise", 0.06)),
        seed=int(block.get("seed", default_seed)),
    )
    return generate_synthetic(spec)


def carve_classifier_val(labels, seed):
    """Stratified 90/10 train/validation carve of the classifier data."""
    rng = stream_rng(seed, "classifier-val-carve")
    labels = np.asarray(labels)
    train, val = [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        perm = idx[rng.permutation(len(idx))]
        n_val = max(1, len(idx) // 10)
        val.append(perm[:n_val])
        train.append(perm[n_val:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(val))


def build_setup_from_spec(spec, net, test_ds, ood_ds, seed, classifier_hash):
    if spec.kind in PUNC_SETUP_KINDS:
        return build_punc_setup(
            net, test_ds.images, test_ds.labels, spec.kind,
            seed=seed, target=spec.target, tol=spec.tol, name=spec.name,
            classifier_hash=classifier_hash,
        )
    if spec.kind in ADV_SETUP_KINDS:
        return build_adv_setup(
            net, test_ds.images, test_ds.labels, spec.kind,
            seed=seed, target=spec.target, tol=spec.tol, name=spec.name,
            classifier_hash=classifier_hash,
        )
    return build_ood_setup(
        net, test_ds.images, test_ds.labels, ood_ds.images,
        seed=seed, name=spec.name, classifier_hash=classifier_hash,
    )


def _make_detector(name, net, config, autoencoder, train_ds):
    # imported here: detectors depend on evaluation.metrics for their
    # hyperparameter search, so the static import would be circular
    from ..detectors import GitDetector, GradNormDetector, GranDetector, MahalanobisDetector

    if name == "git":
        kinds = tuple(k for k in config.streams if k != "identity")
        return GitDetector(net, streams=kinds, autoencoder=autoencoder)
    if name == "gran":
        return GranDetector(net)
    if name == "gradnorm":
        return GradNormDetector(net, mode="last")
    if name == "gradnorm-all":
        return GradNormDetector(net, mode="all")
    if name == "mahalanobis":
        return MahalanobisDetector(
            net, train_ds.images, train_ds.labels, num_classes=train_ds.class_count
        )
    raise ConfigError(f"unknown detector: {name!r}")


def train_detectors(config, net, autoencoder, train_ds, splits, detector_names=None):
    """Fit each configured detector on the seen setup's train/val splits
    (or on the union of all setups when seen == "all")."""
    if config.seen == "all":
        train_x = np.concatenate([splits[s.name][0].images for s in config.setups])
        train_y = np.concatenate([splits[s.name][0].labels for s in config.setups])
        val_x = np.concatenate([splits[s.name][1].images for s in config.setups])
        val_y = np.concatenate([splits[s.name][1].labels for s in config.setups])
        seen_train, seen_val = (train_x, train_y), (val_x, val_y)
    else:
        seen_train, seen_val = splits[config.seen][0], splits[config.seen][1]
    detectors = {}
    for name in detector_names or config.detectors:
        log.info("training detector %s on seen=%s", name, config.seen)
        det = _make_detector(name, net, config, autoencoder, train_ds)
        det.fit(seen_train, seen_val)
        detectors[name] = det
    return detectors


def run_experiment(config, return_artifacts=False):
    """Run the full protocol; returns the EvalReport (plus artifacts on request)."""
    if not config.setups:
        raise ConfigError("no setups configured")
    art = ExperimentArtifacts()
    train_ds = resolve_data(config.train_data, child_seed(config.seed, "data", "train"), "train")
    test_ds = resolve_data(config.test_data, child_seed(config.seed, "data", "test"), "test")
    ood_ds = resolve_data(config.ood_data, child_seed(config.seed, "data", "ood"), "ood")
    art.datasets = {"train": train_ds, "test": test_ds, "ood": ood_ds}

    tr_idx, val_idx = carve_classifier_val(train_ds.labels, config.seed)
    cls_cfg = ClassifierConfig(
        input_shape=train_ds.shape,
        num_classes=train_ds.class_count,
        preset=config.classifier.get("preset", "smallcnn-v1"),
        epochs=int(config.classifier.get("epochs", 20)),
        batch_size=int(config.classifier.get("batch_size", 64)),
        lr=float(config.classifier.get("lr", 0.05)),
        momentum=float(config.classifier.get("momentum", 0.9)),
        seed=child_seed(config.seed, "classifier"),
    )
    log.info("training classifier (%s, %d epochs)", cls_cfg.preset, cls_cfg.epochs)
    net, cls_report = train_classifier(
        cls_cfg,
        (train_ds.images[tr_idx], train_ds.labels[tr_idx]),
        (train_ds.images[val_idx], train_ds.labels[val_idx]),
    )
    art.classifier, art.classifier_report = net, cls_report
    log.info(
        "classifier accuracy: train %.3f val %.3f",
        cls_report.final_train_accuracy, cls_report.final_val_accuracy,
    )

    autoencoder = None
    if "autoencoder" in config.streams and "git" in config.detectors:
        ae_cfg = AutoencoderConfig(
            input_shape=train_ds.shape,
            epochs=int(config.autoencoder.get("epochs", 30)),
            batch_size=int(config.autoencoder.get("batch_size", 64)),
            lr=float(config.autoencoder.get("lr", 1e-3)),
            seed=child_seed(config.seed, "autoencoder"),
        )
        log.info("training autoencoder (%d epochs)", ae_cfg.epochs)
        autoencoder = train_autoencoder(ae_cfg, (train_ds.images[tr_idx], None))
    art.autoencoder = autoencoder

    classifier_hash = net.weights_hash()
    setups, splits = {}, {}
    for spec in config.setups:
        log.info("building setup %s (%s)", spec.name, spec.kind)
        setup = build_setup_from_spec(spec, net, test_ds, ood_ds, config.seed, classifier_hash)
        setups[spec.name] = setup
        splits[spec.name] = split_dataset(setup, child_seed(config.seed, "split", spec.name))
        log.info(
            "setup %s: %d samples, positive fraction %.3f",
            spec.name, len(setup), setup.positive_fraction,
        )
    art.setups, art.splits = setups, splits

    detectors = train_detectors(config, net, autoencoder, train_ds, splits)
    art.detectors = detectors

    rows = []
    for spec in config.setups:
        test_split = splits[spec.name][2]
        seen_flag = config.seen == "all" or spec.name == config.seen
        for det_name in config.detectors:
            scores = detectors[det_name].score_samples(test_split.images)
            rows.append(
                EvalRow(
                    setup=spec.name,
                    detector=det_name,
                    auroc=auroc(scores, test_split.labels),
                    tnr95=tnr_at_tpr(scores, test_split.labels),
                    n=len(test_split.labels),
                    seen=seen_flag,
                    roc=roc_points(scores, test_split.labels),
                )
            )
            log.info("%-10s %-13s auroc %.4f", spec.name, det_name, rows[-1].auroc)

    meta = {
        "classifier_train_accuracy": cls_report.final_train_accuracy,
        "classifier_val_accuracy": cls_report.final_val_accuracy,
        "classifier_hash": classifier_hash,
        "seen": config.seen,
        "setups": {
            name: {
                "kind": s.provenance.get("kind"),
                "severity": s.provenance.get("severity"),
                "achieved_rate": s.provenance.get("achieved_rate"),
                "n": len(s),
                "positive_fraction": s.positive_fraction,
            }
            for name, s in setups.items()
        },
        "detector_hyperparameters": {
            name: det.chosen_hyperparameters()
            for name, det in detectors.items()
            if hasattr(det, "chosen_hyperparameters")
        },
    }
    report = EvalReport(rows=rows, seed=config.seed, meta=meta)
    if return_artifacts:
        return report, art
    return report
