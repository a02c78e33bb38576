import json

import pytest

from crossap.config import ConfigError, RunConfig, load_run_config, parse_override


def test_defaults():
    cfg = RunConfig()
    assert cfg.grid.width_cells == 64
    assert cfg.train.epochs == 15
    assert cfg.train.batch_size == 15
    assert cfg.train.lr == 1e-3
    assert cfg.baselines.beta == 0.1
    assert cfg.assembly.omega == 0.5


def test_json_config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 9, "train": {"epochs": 3}, "grid": {"width_cells": 32}}))
    cfg = load_run_config(path)
    assert cfg.seed == 9
    assert cfg.train.epochs == 3
    assert cfg.grid.width_cells == 32
    assert cfg.train.batch_size == 15  # untouched default


def test_keyvalue_config(tmp_path):
    path = tmp_path / "cfg.txt"
    path.write_text("# comment\ntrain.lr = 0.01\nservice.port=9000\n\nseed=4\n")
    cfg = load_run_config(path)
    assert cfg.train.lr == 0.01
    assert cfg.service.port == 9000
    assert cfg.seed == 4


def test_overrides_win(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"train": {"epochs": 3}}))
    cfg = load_run_config(path, overrides=["train.epochs=7"])
    assert cfg.train.epochs == 7


def test_unknown_keys_rejected(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"train": {"epoch": 3}}))
    with pytest.raises(ConfigError, match="unknown config key"):
        load_run_config(path)
    with pytest.raises(ConfigError, match="unknown config key"):
        load_run_config(None, overrides=["nosuch.thing=1"])


def test_bad_values_rejected():
    with pytest.raises(ConfigError):
        load_run_config(None, overrides=["train.epochs=3.5"])
    with pytest.raises(ConfigError):
        load_run_config(None, overrides=["train.lr=banana"])
    with pytest.raises(ConfigError):
        load_run_config(None, overrides=["train=3"])  # section, not a value
    with pytest.raises(ConfigError):
        parse_override("no-equals-sign")


def test_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        load_run_config("/definitely/not/here.json")


def test_invalid_json(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("{broken")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_run_config(path)


def test_to_dict_round_trip():
    cfg = load_run_config(None, overrides=["generation.maps=5"])
    doc = cfg.to_dict()
    assert doc["generation"]["maps"] == 5
    assert set(doc) == {
        "seed", "grid", "propagation", "generation",
        "assembly", "train", "baselines", "service",
    }
