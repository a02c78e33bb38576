import base64
import io

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from crossap.cli import main
from crossap.config import RunConfig
from crossap.datasets import read_dataset, read_obstacle_masks
from crossap.evaluate import model_infer
from crossap.grids import Coord, denormalize_db
from crossap.service import create_app
from crossap.unet import UNet


@pytest.fixture(scope="module")
def served(tmp_path_factory):
    root = tmp_path_factory.mktemp("svc")
    data, run = root / "data", root / "run"
    tiny = ["--set", "grid.width_cells=32",
            "--set", "generation.buildings_min=2", "--set", "generation.buildings_max=4"]
    assert main(["gen-data", "--maps", "3", "--aps", "3", "--seed", "5",
                 "--out", str(data)] + tiny) == 0
    assert main(["train", "--data", str(data), "--out", str(run),
                 "--set", "train.epochs=1", "--set", "train.base_width=4",
                 "--set", "train.depth=3", "--set", "train.batch_size=4"]) == 0
    cfg = RunConfig()
    app = create_app(run / "model.npz", data, cfg)
    return TestClient(app), data, run, cfg


def test_scenario_listing(served):
    client, data, _, _ = served
    r = client.get("/api/scenarios")
    assert r.status_code == 200
    doc = r.json()
    assert len(doc["scenarios"]) == 3
    first = doc["scenarios"][0]
    assert first["width_cells"] == 32
    assert len(first["ap_coords"]) == first["n_aps"] == 3
    assert first["has_obstacle_mask"] is True


def test_gain_endpoint_values_and_png(served):
    client, data, _, _ = served
    _, scenarios = read_dataset(data)
    sc = scenarios[0]
    rec = sc.records[1]
    r = client.get(f"/api/scenarios/{sc.environment_id}/aps/1/gain")
    assert r.status_code == 200
    doc = r.json()
    assert (doc["row"], doc["col"]) == (rec.ap_coord.row, rec.ap_coord.col)
    values = np.array(doc["values_db"]).reshape(32, 32)
    assert np.allclose(values, denormalize_db(rec.gain.values, sc.spec), atol=1e-9)

    r = client.get(f"/api/scenarios/{sc.environment_id}/aps/1/gain", params={"format": "png"})
    pixels = np.asarray(Image.open(io.BytesIO(base64.b64decode(r.json()["png_base64"]))))
    assert pixels.shape == (32, 32)
    stored = np.asarray(Image.open(data / sc.environment_id / "gain_1.png"))
    assert np.array_equal(pixels, stored)


def test_infer_matches_offline_exactly(served):
    client, data, run, cfg = served
    _, scenarios = read_dataset(data)
    sc = scenarios[0]
    coord = sc.records[0].ap_coord  # an existing AP's coordinate
    r = client.post(
        f"/api/scenarios/{sc.environment_id}/infer",
        json={"row": coord.row, "col": coord.col, "schemes": ["model"]},
    )
    assert r.status_code == 200
    payload = r.json()["schemes"]["model"]
    assert len(payload["values_db"]) == 32 * 32

    model, _ = UNet.load(run / "model.npz")
    offline = model_infer(model, sc, coord, cfg.assembly.omega)
    served_map = np.array(payload["values_db"]).reshape(32, 32)
    assert np.array_equal(served_map, offline.to_db())


def test_infer_replay_is_identical_and_stateless(served):
    client, *_ = served
    body = {"row": 7, "col": 9, "schemes": ["model", "weighted", "pathloss"]}
    first = client.post("/api/scenarios/env00001/infer", json=body)
    for _ in range(3):
        again = client.post("/api/scenarios/env00001/infer", json=body)
        assert again.content == first.content
    # interleaved different request must not disturb replays
    client.post("/api/scenarios/env00002/infer", json={"row": 1, "col": 1})
    assert client.post("/api/scenarios/env00001/infer", json=body).content == first.content


def test_coverage_threshold_above_max(served):
    client, *_ = served
    r = client.post(
        "/api/scenarios/env00000/infer",
        json={"row": 6, "col": 6, "schemes": ["pathloss"], "coverage_threshold_db": 10.0},
    )
    stats = r.json()["schemes"]["pathloss"]["stats"]
    assert stats["coverage_fraction_above_threshold"] == 0.0
    assert stats["threshold_db"] == 10.0


def test_error_statuses(served):
    client, data, _, _ = served
    assert client.get("/api/scenarios/ghost/aps/0/gain").status_code == 404
    assert client.get("/api/scenarios/env00000/aps/99/gain").status_code == 404
    assert client.post("/api/scenarios/ghost/infer", json={"row": 1, "col": 1}).status_code == 404

    r = client.post("/api/scenarios/env00000/infer", json={"row": 40, "col": 1})
    assert r.status_code == 422
    assert "[0, 32)" in r.json()["detail"]

    masks = read_obstacle_masks(data, ["env00000"])
    rr, cc = map(int, np.argwhere(masks["env00000"])[0])
    r = client.post("/api/scenarios/env00000/infer", json={"row": rr, "col": cc})
    assert r.status_code == 422
    assert "obstacle" in r.json()["detail"]

    assert client.post("/api/scenarios/env00000/infer",
                       json={"row": "x", "col": 1}).status_code == 400
    assert client.post("/api/scenarios/env00000/infer",
                       content="{not json", headers={"content-type": "application/json"}).status_code == 400
    assert client.post("/api/scenarios/env00000/infer", json={"col": 1}).status_code == 400

    r = client.post("/api/scenarios/env00000/infer",
                    json={"row": 1, "col": 1, "schemes": ["sorcery"]})
    assert r.status_code == 422
    r = client.post("/api/scenarios/env00000/infer", json={"row": 1, "col": 1, "schemes": []})
    assert r.status_code == 422


def test_get_endpoints_do_not_mutate(served):
    client, *_ = served
    before = client.get("/api/scenarios").content
    client.get("/api/scenarios/env00000/aps/0/gain")
    client.post("/api/scenarios/env00000/infer", json={"row": 2, "col": 2})
    assert client.get("/api/scenarios").content == before
