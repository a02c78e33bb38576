import json
from pathlib import Path

import numpy as np
import pytest

from crossap.cli import main

TINY = [
    "--set", "grid.width_cells=32",
    "--set", "generation.buildings_min=2",
    "--set", "generation.buildings_max=4",
]
TINY_TRAIN = [
    "--set", "train.epochs=1",
    "--set", "train.base_width=4",
    "--set", "train.depth=3",
    "--set", "train.batch_size=4",
]


def gen(tmp_path, name="data", maps=4, aps=3, seed=7):
    out = tmp_path / name
    code = main(["gen-data", "--maps", str(maps), "--aps", str(aps),
                 "--seed", str(seed), "--out", str(out)] + TINY)
    assert code == 0
    return out


def tree_bytes(root: Path) -> dict:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_gen_data_deterministic(tmp_path):
    a = gen(tmp_path, "a")
    b = gen(tmp_path, "b")
    ta, tb = tree_bytes(a), tree_bytes(b)
    assert list(ta) == list(tb)
    for rel in ta:
        assert ta[rel] == tb[rel], rel


def test_gen_data_layout(tmp_path):
    data = gen(tmp_path)
    manifest = json.loads((data / "manifest.json").read_text())
    assert manifest["version"] == 1
    assert len(manifest["environments"]) == 4
    assert (data / "env00000" / "ap_0.json").exists()
    assert (data / "env00000" / "gain_0.png").exists()
    assert (data / "env00000" / "obstacle.png").exists()
    assert (data / "genconfig.json").exists()


def test_train_then_eval_on_bundled_tiny_config(tmp_path, capsys):
    # end-to-end smoke on the tiny config shipped in configs/
    cfg = str(Path(__file__).resolve().parent.parent / "configs" / "tiny.json")
    data, run = tmp_path / "data", tmp_path / "run"
    assert main(["gen-data", "--config", cfg, "--seed", "7", "--out", str(data)]) == 0
    assert main(["train", "--config", cfg, "--data", str(data), "--out", str(run),
                 "--seed", "1"]) == 0
    assert (run / "model.npz").exists()
    assert json.loads((run / "run_config.json").read_text())["train"]["epochs"] == 2
    report = json.loads((run / "train_report.json").read_text())
    assert len(report["train_loss"]) == 2
    assert report["config"]["seed"] == 1

    evaldir = tmp_path / "eval"
    assert main(["eval", "--config", cfg, "--data", str(data),
                 "--checkpoint", str(run / "model.npz"),
                 "--out", str(evaldir), "--export-maps", "1"]) == 0
    doc = json.loads((evaldir / "eval_report.json").read_text())
    assert doc["scheme_order"][0] == "model"
    assert doc["config"]["run_config"]["train"]["epochs"] == 2
    assert (evaldir / "eval_per_sample.csv").exists()
    exported = list((evaldir / "maps").glob("*.png"))
    assert exported, "map export produced no files"


def test_infer_writes_maps_and_stats(tmp_path):
    data = gen(tmp_path)
    run = tmp_path / "run"
    assert main(["train", "--data", str(data), "--out", str(run)] + TINY_TRAIN) == 0
    out = tmp_path / "infer"
    code = main(["infer", "--data", str(data), "--checkpoint", str(run / "model.npz"),
                 "--env", "env00001", "--at", "3,4",
                 "--schemes", "model,weighted,pathloss", "--out", str(out)])
    assert code == 0
    for scheme in ("model", "weighted", "pathloss"):
        assert (out / f"infer_env00001_r3c4_{scheme}.png").exists()
    doc = json.loads((out / "infer_env00001_r3c4_stats.json").read_text())
    assert set(doc["stats"]) == {"model", "weighted", "pathloss"}
    assert doc["stats"]["model"]["min_db"] <= doc["stats"]["model"]["max_db"]
    assert doc["config"]["service"]["coverage_threshold_db"] == -90.0  # config echo


def test_infer_out_of_bounds_exits_2(tmp_path, capsys):
    data = gen(tmp_path)
    run = tmp_path / "run"
    assert main(["train", "--data", str(data), "--out", str(run)] + TINY_TRAIN) == 0
    code = main(["infer", "--data", str(data), "--checkpoint", str(run / "model.npz"),
                 "--env", "env00001", "--at", "99,4", "--out", str(tmp_path / "x")])
    assert code == 2
    err = capsys.readouterr().err
    assert "99" in err and "[0, 32)" in err


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["gen-data", "--bogus", "1", "--out", "x"])
    assert exc.value.code == 2


def test_bad_config_key_exits_2(tmp_path, capsys):
    code = main(["gen-data", "--maps", "2", "--out", str(tmp_path / "d"),
                 "--set", "nope.nope=1"])
    assert code == 2
    assert "unknown config key" in capsys.readouterr().err


def test_missing_dataset_exits_1(tmp_path, capsys):
    code = main(["train", "--data", str(tmp_path / "ghost"), "--out", str(tmp_path / "o")])
    assert code == 1


def test_infer_bad_at_format_exits_2(tmp_path, capsys):
    code = main(["infer", "--data", str(tmp_path), "--checkpoint", "x",
                 "--env", "e", "--at", "3x4", "--out", str(tmp_path)])
    assert code == 2
    assert "ROW,COL" in capsys.readouterr().err
