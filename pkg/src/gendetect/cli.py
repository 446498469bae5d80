"""Command-line front end for the full pipeline.

Every subcommand maps onto one library operation; a single JSON config file
drives the pipeline, with ``--seed`` and ``--out`` overriding its seed and
output directory.  Outputs land under the output directory with stable
names.  Log verbosity comes from the ``GENDETECT_LOG`` environment variable
(debug, info, warning, error).
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .data import SyntheticSpec, generate_synthetic, load_dataset, save_dataset
from .detectors import load_detector, save_detector
from .errors import CheckpointError, ConfigError, GendetectError
from .evaluation import ExperimentConfig, emit_report, load_report, run_experiment, split_dataset
from .evaluation.experiment import (
    build_setup_from_spec,
    carve_classifier_val,
    child_seed,
    resolve_data,
    train_detectors,
)
from .models import (
    AutoencoderConfig,
    ClassifierConfig,
    load_checkpoint,
    save_checkpoint,
    train_autoencoder,
    train_classifier,
)
from .perturb import load_setup, save_setup

log = logging.getLogger("gendetect")

CLASSIFIER_CKPT = "classifier.ckpt"
AUTOENCODER_CKPT = "autoencoder.ckpt"


def _configure_logging():
    level = os.environ.get("GENDETECT_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(message)s")


def _load_config(args):
    if not args.config:
        raise ConfigError("this subcommand requires --config")
    path = Path(args.config)
    if not path.exists():
        raise ConfigError(f"config not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    config = ExperimentConfig.from_dict(doc)
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.out_dir = args.out
    return config


def _out_dir(config, args):
    out = Path(args.out or config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen_data(args):
    if not args.out:
        raise ConfigError("gen-data requires --out")
    spec = SyntheticSpec(
        family=args.family, count=args.count, size=args.size,
        seed=args.seed if args.seed is not None else 0, noise=args.noise,
    )
    ds = generate_synthetic(spec)
    path = save_dataset(ds, args.out)
    print(f"wrote {len(ds)} samples to {path}")
    return 0


def cmd_train_classifier(args):
    config = _load_config(args)
    out = _out_dir(config, args)
    train_ds = resolve_data(config.train_data, child_seed(config.seed, "data", "train"), "train")
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
    net, report = train_classifier(
        cls_cfg,
        (train_ds.images[tr_idx], train_ds.labels[tr_idx]),
        (train_ds.images[val_idx], train_ds.labels[val_idx]),
    )
    path = save_checkpoint(
        net, out / CLASSIFIER_CKPT,
        metadata={"seed": cls_cfg.seed, "epochs": cls_cfg.epochs,
                  "final_accuracy": f"{report.final_val_accuracy:.4f}"},
    )
    print(f"classifier val accuracy {report.final_val_accuracy:.4f}; checkpoint at {path}")
    return 0


def cmd_train_autoencoder(args):
    config = _load_config(args)
    out = _out_dir(config, args)
    train_ds = resolve_data(config.train_data, child_seed(config.seed, "data", "train"), "train")
    tr_idx, _ = carve_classifier_val(train_ds.labels, config.seed)
    ae_cfg = AutoencoderConfig(
        input_shape=train_ds.shape,
        epochs=int(config.autoencoder.get("epochs", 30)),
        batch_size=int(config.autoencoder.get("batch_size", 64)),
        lr=float(config.autoencoder.get("lr", 1e-3)),
        seed=child_seed(config.seed, "autoencoder"),
    )
    ae = train_autoencoder(ae_cfg, (train_ds.images[tr_idx], None))
    path = save_checkpoint(ae, out / AUTOENCODER_CKPT, metadata={"seed": ae_cfg.seed, "epochs": ae_cfg.epochs})
    print(f"autoencoder checkpoint at {path}")
    return 0


def _load_classifier(out):
    path = out / CLASSIFIER_CKPT
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    net, _ = load_checkpoint(path)
    return net


def cmd_build_setup(args):
    config = _load_config(args)
    out = _out_dir(config, args)
    net = _load_classifier(out)
    spec = next((s for s in config.setups if s.name == args.setup), None)
    if spec is None:
        raise ConfigError(f"setup {args.setup!r} is not configured (have "
                          f"{[s.name for s in config.setups]})")
    test_ds = resolve_data(config.test_data, child_seed(config.seed, "data", "test"), "test")
    ood_ds = resolve_data(config.ood_data, child_seed(config.seed, "data", "ood"), "ood")
    setup = build_setup_from_spec(spec, net, test_ds, ood_ds, config.seed, net.weights_hash())
    path = save_setup(setup, out / "setups" / spec.name)
    print(
        f"setup {spec.name}: {len(setup)} samples, positive fraction "
        f"{setup.positive_fraction:.3f}, at {path}"
    )
    return 0


def cmd_train_detector(args):
    config = _load_config(args)
    out = _out_dir(config, args)
    net = _load_classifier(out)
    if args.detector not in config.detectors:
        raise ConfigError(f"detector {args.detector!r} is not configured (have {config.detectors})")
    autoencoder = None
    if args.detector == "git" and "autoencoder" in config.streams:
        ae_path = out / AUTOENCODER_CKPT
        if not ae_path.exists():
            raise CheckpointError(f"checkpoint not found: {ae_path}")
        autoencoder, _ = load_checkpoint(ae_path)
    train_ds = resolve_data(config.train_data, child_seed(config.seed, "data", "train"), "train")
    needed = [s.name for s in config.setups] if config.seen == "all" else [config.seen]
    splits = {}
    for name in needed:
        setup_path = out / "setups" / name
        if not (setup_path / "meta.json").exists():
            raise ConfigError(f"setup not built yet: {setup_path} (run build-setup --setup {name})")
        setup = load_setup(setup_path)
        splits[name] = split_dataset(setup, child_seed(config.seed, "split", name))
    detectors = train_detectors(config, net, autoencoder, train_ds, splits,
                                detector_names=[args.detector])
    path = save_detector(detectors[args.detector], out / "detectors" / f"{args.detector}.json")
    print(f"detector {args.detector} trained on seen={config.seen}; artifact at {path}")
    return 0


def cmd_evaluate(args):
    config = _load_config(args)
    out = _out_dir(config, args)
    report, art = run_experiment(config, return_artifacts=True)
    save_checkpoint(art.classifier, out / CLASSIFIER_CKPT,
                    metadata={"seed": config.seed})
    if art.autoencoder is not None:
        save_checkpoint(art.autoencoder, out / AUTOENCODER_CKPT, metadata={"seed": config.seed})
    for name, setup in art.setups.items():
        save_setup(setup, out / "setups" / name)
    for name, det in art.detectors.items():
        save_detector(det, out / "detectors" / f"{name}.json")
    emit_report(report, out)
    print(f"evaluation complete: {len(report.rows)} rows, report under {out}")
    return 0


def cmd_report(args):
    out = Path(args.out or "out")
    report_path = out / "report.json"
    if not report_path.exists():
        raise ConfigError(f"no report found at {report_path} (run evaluate first)")
    report = load_report(report_path)
    written = emit_report(report, out)
    print(f"wrote {len(written)} report files under {out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gendetect",
        description="Detect untrustworthy image-classifier predictions.",
    )
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--config", type=str, default=None, help="experiment config (JSON)")
    parser.add_argument("--out", type=str, default=None, help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic dataset container")
    p.add_argument("--family", required=True, choices=("shapes-v1", "textures-v1"))
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--noise", type=float, default=0.06)
    p.set_defaults(func=cmd_gen_data)

    sub.add_parser("train-classifier", help="train the classifier under test").set_defaults(
        func=cmd_train_classifier
    )
    sub.add_parser("train-autoencoder", help="train the stream autoencoder").set_defaults(
        func=cmd_train_autoencoder
    )

    p = sub.add_parser("build-setup", help="build one perturbation setup")
    p.add_argument("--setup", required=True, help="setup name from the config")
    p.set_defaults(func=cmd_build_setup)

    p = sub.add_parser("train-detector", help="train one detector on the seen setup")
    p.add_argument("--detector", required=True)
    p.set_defaults(func=cmd_train_detector)

    sub.add_parser("evaluate", help="run the full experiment").set_defaults(func=cmd_evaluate)
    sub.add_parser("report", help="re-emit summary and ROC files from report.json").set_defaults(
        func=cmd_report
    )
    return parser


def main(argv=None):
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GendetectError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
