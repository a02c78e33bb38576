"""Request/response models of the placement service (see docs/api.md)."""

from __future__ import annotations

from pydantic import BaseModel, Field

KNOWN_SCHEMES = ("model", "weighted", "pathloss")


class ScenarioSummary(BaseModel):
    id: str
    width_cells: int
    cell_size_m: float
    gain_floor_db: float
    gain_span_db: float
    n_aps: int
    ap_coords: list[list[int]]  # [row, col] per existing AP
    has_obstacle_mask: bool


class ScenarioListResponse(BaseModel):
    scenarios: list[ScenarioSummary]


class GainResponse(BaseModel):
    env_id: str
    ap_index: int
    row: int
    col: int
    width_cells: int
    values_db: list[float]  # row-major W*W


class MapStats(BaseModel):
    threshold_db: float
    coverage_fraction_above_threshold: float
    min_db: float
    max_db: float
    mean_db: float


class InferRequest(BaseModel):
    row: int
    col: int
    schemes: list[str] = Field(default_factory=lambda: ["model"])
    coverage_threshold_db: float | None = None


class SchemePrediction(BaseModel):
    values_db: list[float]  # row-major W*W
    stats: MapStats


class InferResponse(BaseModel):
    env_id: str
    row: int
    col: int
    width_cells: int
    schemes: dict[str, SchemePrediction]
