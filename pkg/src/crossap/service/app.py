"""HTTP inference service for interactive AP placement.

The model checkpoint and the scenario store are loaded once at startup
and shared read-only across request handlers; every endpoint is a pure
function of its inputs, so identical requests produce identical
payloads and replays cannot mutate state.

Error contract: 404 for unknown scenarios or AP indexes, 422 for
out-of-bounds or in-obstacle coordinates and unknown scheme names,
400 for bodies that fail schema validation.
"""

from __future__ import annotations

import base64
import io
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image

from ..baselines import PathLossConfig, WeightedConfig, pathloss_infer, weighted_infer
from ..config import RunConfig
from ..datasets import read_dataset, read_obstacle_masks
from ..evaluate import map_stats, model_infer
from ..grids import Coord, GridMap, Scenario, denormalize_db
from ..unet import UNet
from .schemas import (
    KNOWN_SCHEMES,
    GainResponse,
    InferRequest,
    InferResponse,
    MapStats,
    ScenarioListResponse,
    ScenarioSummary,
    SchemePrediction,
)


class ServiceState:
    """Read-only model plus scenario store shared by all handlers."""

    def __init__(
        self,
        model: UNet,
        scenarios: dict[str, Scenario],
        masks: dict[str, np.ndarray],
        cfg: RunConfig,
    ):
        self.model = model
        self.scenarios = scenarios
        self.masks = masks
        self.cfg = cfg

    def scenario(self, env_id: str) -> Scenario:
        sc = self.scenarios.get(env_id)
        if sc is None:
            raise HTTPException(status_code=404, detail=f"unknown scenario {env_id!r}")
        return sc

    def checked_coord(self, scenario: Scenario, row: int, col: int) -> Coord:
        try:
            coord = Coord(row, col).check_bounds(scenario.spec)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        mask = self.masks.get(scenario.environment_id)
        if mask is not None and mask[row, col]:
            raise HTTPException(
                status_code=422,
                detail=f"cell ({row}, {col}) lies inside an obstacle",
            )
        return coord

    def predict(self, scenario: Scenario, coord: Coord, scheme: str) -> GridMap:
        if scheme == "model":
            return model_infer(self.model, scenario, coord, self.cfg.assembly.omega)
        if scheme == "weighted":
            return weighted_infer(scenario, coord, WeightedConfig(beta=self.cfg.baselines.beta))
        if scheme == "pathloss":
            mask = self.masks.get(scenario.environment_id)
            pl_cfg = PathLossConfig(
                freq_ghz=self.cfg.propagation.freq_ghz,
                tx_power_dbm=self.cfg.propagation.tx_power_dbm,
                ap_height_m=self.cfg.baselines.ap_height_m,
                ut_height_m=self.cfg.baselines.ut_height_m,
                los_mode="mask-based" if mask is not None else "always-los",
            )
            return pathloss_infer(coord, scenario.spec, pl_cfg, obstacle_mask=mask)
        raise HTTPException(status_code=422, detail=f"unknown scheme {scheme!r}")


def _png_base64(gain: GridMap) -> str:
    pixels = np.floor(gain.values * 255.0 + 0.5).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(pixels, mode="L").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode()


def create_app(
    checkpoint_path: Path | str,
    dataset_root: Path | str,
    cfg: RunConfig | None = None,
    static_dir: Path | str | None = None,
) -> FastAPI:
    cfg = cfg or RunConfig()
    model, _ = UNet.load(checkpoint_path)
    _, scenario_list = read_dataset(dataset_root)
    scenarios = {sc.environment_id: sc for sc in scenario_list}
    masks = read_obstacle_masks(dataset_root, list(scenarios))
    state = ServiceState(model, scenarios, masks, cfg)

    app = FastAPI(title="crossap placement service", version="0.1.0")
    app.state.service = state

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        # schema-level failures are malformed requests, not semantic 422s
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.get("/api/scenarios", response_model=ScenarioListResponse)
    def list_scenarios():
        out = []
        for sc in state.scenarios.values():
            out.append(
                ScenarioSummary(
                    id=sc.environment_id,
                    width_cells=sc.spec.width_cells,
                    cell_size_m=sc.spec.cell_size_m,
                    gain_floor_db=sc.spec.gain_floor_db,
                    gain_span_db=sc.spec.gain_span_db,
                    n_aps=sc.n_aps,
                    ap_coords=[[r, c] for r, c in sc.ap_coords()],
                    has_obstacle_mask=sc.environment_id in state.masks,
                )
            )
        return ScenarioListResponse(scenarios=out)

    @app.get("/api/scenarios/{env_id}/aps/{ap_index}/gain")
    def get_gain(env_id: str, ap_index: int, format: str = "values"):
        sc = state.scenario(env_id)
        if not (0 <= ap_index < sc.n_aps):
            raise HTTPException(status_code=404, detail=f"scenario {env_id!r} has no AP {ap_index}")
        rec = sc.records[ap_index]
        if format == "png":
            return {"env_id": env_id, "ap_index": ap_index, "png_base64": _png_base64(rec.gain)}
        if format != "values":
            raise HTTPException(status_code=422, detail=f"unknown format {format!r}")
        return GainResponse(
            env_id=env_id,
            ap_index=ap_index,
            row=rec.ap_coord.row,
            col=rec.ap_coord.col,
            width_cells=sc.spec.width_cells,
            values_db=denormalize_db(rec.gain.values, sc.spec).ravel().tolist(),
        )

    @app.post("/api/scenarios/{env_id}/infer", response_model=InferResponse)
    def infer(env_id: str, body: InferRequest):
        sc = state.scenario(env_id)
        coord = state.checked_coord(sc, body.row, body.col)
        threshold = (
            body.coverage_threshold_db
            if body.coverage_threshold_db is not None
            else cfg.service.coverage_threshold_db
        )
        if not body.schemes:
            raise HTTPException(status_code=422, detail="schemes list is empty")
        preds = {}
        for scheme in body.schemes:
            gain = state.predict(sc, coord, scheme)
            preds[scheme] = SchemePrediction(
                values_db=gain.to_db().ravel().tolist(),
                stats=MapStats(**map_stats(gain, threshold)),
            )
        return InferResponse(
            env_id=env_id,
            row=coord.row,
            col=coord.col,
            width_cells=sc.spec.width_cells,
            schemes=preds,
        )

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app
