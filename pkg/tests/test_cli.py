from __future__ import annotations

import copy
import json

import pytest

from lqlab import cli
from lqlab.experiments import COMMANDS, ConfigError, ExperimentConfig

from small_config import SMALL


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(SMALL))
    return path


def run(config_file, out, *args):
    return cli.main(["--config", str(config_file), "--out", str(out), *args])


def snapshot(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


@pytest.mark.parametrize("command", sorted(COMMANDS))
def test_command_is_idempotent_and_echoes_config(command, config_file, tmp_path):
    out = tmp_path / "out"
    assert run(config_file, out, command) == cli.EXIT_OK
    d = out / command
    first = snapshot(d)
    assert any(n.endswith(".csv") for n in first)
    echoed = json.loads(first["config.json"])
    assert echoed == ExperimentConfig.from_dict(SMALL).with_overrides(out=str(out)).values
    manifest = json.loads(first["manifest.json"])
    assert manifest["command"] == command
    listed = set(manifest["artifacts"])
    assert listed == set(first) - {"config.json", "manifest.json"}
    assert all(v["seed"] == SMALL["seed"] for v in manifest["artifacts"].values())
    assert run(config_file, out, command) == cli.EXIT_OK
    assert snapshot(d) == first


def test_seed_override_changes_output(config_file, tmp_path):
    assert run(config_file, tmp_path / "a", "randomness") == 0
    assert cli.main(["--config", str(config_file), "--out", str(tmp_path / "b"), "--seed", "12",
                     "randomness"]) == 0
    a = (tmp_path / "a" / "randomness" / "randomness_curve.csv").read_bytes()
    b = (tmp_path / "b" / "randomness" / "randomness_curve.csv").read_bytes()
    assert a != b
    assert json.loads((tmp_path / "b" / "randomness" / "config.json").read_text())["seed"] == 12


def test_dataset_build_inspect_and_model_round_trip(config_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert run(config_file, out, "dataset", "build", "--scheme", "four-class") == 0
    data = out / "dataset" / "dataset_four-class.csv"
    assert data.exists()
    capsys.readouterr()
    assert run(config_file, out, "dataset", "inspect", str(data)) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["scheme"] == "four-class" and info["n_samples"] == 50 * 16
    assert 0 <= info["U_analytic"] <= 2

    assert run(config_file, out, "model", "train", "--data", str(data)) == 0
    model = out / "model" / "model_four-class_gbdt.json"
    assert model.exists()
    assert run(config_file, out, "model", "eval", str(model), str(data)) == 0
    assert (out / "model" / "eval_model_four-class_gbdt.csv").exists()


def test_model_eval_scheme_mismatch_is_validation_error(config_file, tmp_path):
    out = tmp_path / "out"
    assert run(config_file, out, "model", "train", "--scheme", "two-class") == 0
    assert run(config_file, out, "dataset", "build", "--scheme", "four-class") == 0
    code = run(config_file, out, "model", "eval",
               str(out / "model" / "model_two-class_decision-tree.json"),
               str(out / "dataset" / "dataset_four-class.csv"))
    assert code == cli.EXIT_NUMERIC


def test_unknown_config_key_is_config_error(tmp_path):
    bad = copy.deepcopy(SMALL)
    bad["randomness"]["points"] = 3
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    assert cli.main(["--config", str(path), "--out", str(tmp_path), "randomness"]) == cli.EXIT_CONFIG


@pytest.mark.parametrize("patch", [
    {"channel": {"alpha": -1.0}},
    {"schemes": ["three-class"]},
    {"train_fraction": 1.0},
    {"predictors": [{"kind": "decision-tree", "hyperparameters": {"depth": 2}}]},
    {"mislabel_source": "oracle"},
])
def test_invalid_values_are_config_errors(patch, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(patch))
    assert cli.main(["--config", str(path), "--out", str(tmp_path), "table"]) == cli.EXIT_CONFIG
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(patch)


def test_malformed_json_is_config_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert cli.main(["--config", str(path), "randomness"]) == cli.EXIT_CONFIG


def test_missing_config_is_io_error(tmp_path):
    assert cli.main(["--config", str(tmp_path / "nope.json"), "randomness"]) == cli.EXIT_IO


def test_unwritable_output_is_io_error(config_file, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert run(config_file, blocker, "randomness") == cli.EXIT_IO


def test_missing_dataset_is_io_error(config_file, tmp_path):
    assert run(config_file, tmp_path, "dataset", "inspect", str(tmp_path / "x.csv")) == cli.EXIT_IO
