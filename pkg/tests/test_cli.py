"""Command-line interface: subcommand flow, error reporting, exit codes."""

import json

import numpy as np
import pytest

from gendetect.cli import main
from gendetect.data import load_dataset

MINI_CONFIG = dict(
    seed=13,
    train_data={"family": "shapes-v1", "count": 300, "seed": 31},
    test_data={"family": "shapes-v1", "count": 160, "seed": 32},
    ood_data=None,
    classifier={"epochs": 6},
    streams=["identity", "gaussian"],
    detectors=["gran", "gradnorm"],
    setups=[{"name": "fgsm", "kind": "fgsm", "tol": 0.05}],
    seen="fgsm",
)


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "mini.json"
    path.write_text(json.dumps(MINI_CONFIG))
    return path


class TestGenData:
    def test_writes_loadable_container(self, tmp_path, capsys):
        out = tmp_path / "ds"
        rc = main(["--seed", "5", "--out", str(out), "gen-data", "--family", "shapes-v1", "--count", "12"])
        assert rc == 0
        ds = load_dataset(out)
        assert len(ds) == 12
        assert "12 samples" in capsys.readouterr().out

    def test_deterministic_for_seed(self, tmp_path):
        main(["--seed", "5", "--out", str(tmp_path / "a"), "gen-data", "--family", "textures-v1", "--count", "9"])
        main(["--seed", "5", "--out", str(tmp_path / "b"), "gen-data", "--family", "textures-v1", "--count", "9"])
        a = load_dataset(tmp_path / "a")
        b = load_dataset(tmp_path / "b")
        np.testing.assert_array_equal(a.images, b.images)


class TestErrors:
    def test_missing_config_is_single_line_error(self, capsys):
        rc = main(["train-classifier"])
        assert rc != 0
        err = capsys.readouterr().err
        assert err.startswith("error:")
        assert len(err.strip().splitlines()) == 1

    def test_nonexistent_config_path(self, tmp_path, capsys):
        rc = main(["--config", str(tmp_path / "nope.json"), "train-classifier"])
        assert rc != 0
        assert "config not found" in capsys.readouterr().err

    def test_missing_checkpoint_names_path(self, config_path, tmp_path, capsys):
        rc = main(["--config", str(config_path), "--out", str(tmp_path / "run"),
                   "build-setup", "--setup", "fgsm"])
        assert rc != 0
        err = capsys.readouterr().err
        assert "checkpoint not found:" in err
        assert str(tmp_path / "run") in err

    def test_unconfigured_setup_rejected(self, config_path, tmp_path, capsys):
        main(["--config", str(config_path), "--out", str(tmp_path / "run"), "train-classifier"])
        rc = main(["--config", str(config_path), "--out", str(tmp_path / "run"),
                   "build-setup", "--setup", "bim"])
        assert rc != 0
        assert "not configured" in capsys.readouterr().err

    def test_unknown_flag_exits_nonzero(self, config_path):
        with pytest.raises(SystemExit) as exc:
            main(["--config", str(config_path), "evaluate", "--frobnicate"])
        assert exc.value.code != 0

    def test_report_before_evaluate(self, tmp_path, capsys):
        rc = main(["--out", str(tmp_path), "report"])
        assert rc != 0
        assert "no report found" in capsys.readouterr().err

    def test_gen_data_requires_out(self, capsys):
        rc = main(["gen-data", "--family", "shapes-v1", "--count", "4"])
        assert rc != 0
        assert "requires --out" in capsys.readouterr().err

    def test_gen_data_invalid_count_single_line(self, tmp_path, capsys):
        rc = main(["--out", str(tmp_path / "x"), "gen-data", "--family", "shapes-v1", "--count", "0"])
        assert rc != 0
        err = capsys.readouterr().err
        assert err.startswith("error:") and len(err.strip().splitlines()) == 1


class TestPipelineFlow:
    def test_stepwise_subcommands_compose(self, config_path, tmp_path, capsys):
        out = str(tmp_path / "run")
        assert main(["--config", str(config_path), "--out", out, "train-classifier"]) == 0
        assert main(["--config", str(config_path), "--out", out, "build-setup", "--setup", "fgsm"]) == 0
        assert main(["--config", str(config_path), "--out", out, "train-detector", "--detector", "gran"]) == 0
        assert (tmp_path / "run" / "classifier.ckpt").exists()
        assert (tmp_path / "run" / "setups" / "fgsm" / "meta.json").exists()
        assert (tmp_path / "run" / "detectors" / "gran.json").exists()

    def test_evaluate_then_report(self, config_path, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(["--config", str(config_path), "--out", str(out), "evaluate"]) == 0
        assert (out / "summary.csv").exists()
        assert (out / "report.json").exists()
        assert (out / "roc" / "roc_fgsm_gran.txt").exists()
        (out / "summary.csv").unlink()
        assert main(["--out", str(out), "report"]) == 0
        assert (out / "summary.csv").exists()
        header = (out / "summary.csv").read_text().splitlines()[0]
        assert header == "setup,detector,auroc,tnr95,n,seen"
