"""Core grid value types and error metrics.

Channel gain is stored normalized in [0, 1]; the dB scale only appears at
I/O and metric boundaries. A :class:`GridSpec` fixes the affine mapping
between the two: ``gain_db = gain_floor_db + g_norm * gain_span_db``.

All types here are immutable after construction (frozen dataclasses with
read-only numpy buffers), so they can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GridSpec",
    "GridMap",
    "Coord",
    "CKMRecord",
    "Scenario",
    "normalize_db",
    "denormalize_db",
    "mse",
    "mse_to_rmse",
    "drop_record",
]


@dataclass(frozen=True)
class GridSpec:
    """Geometry and gain-scale of one map grid.

    width_cells:  grid is width_cells x width_cells
    cell_size_m:  meters per cell edge
    gain_floor_db: dB value that normalizes to 0.0 (noise floor)
    gain_span_db:  dynamic range in dB; floor + span normalizes to 1.0
    """

    width_cells: int = 64
    cell_size_m: float = 1.0
    gain_floor_db: float = -147.0
    gain_span_db: float = 100.0

    def __post_init__(self):
        if self.width_cells < 8:
            raise ValueError(f"width_cells must be >= 8, got {self.width_cells}")
        if not (self.cell_size_m > 0):
            raise ValueError(f"cell_size_m must be positive, got {self.cell_size_m}")
        if not (self.gain_span_db > 0):
            raise ValueError(f"gain_span_db must be positive, got {self.gain_span_db}")
        for name in ("cell_size_m", "gain_floor_db", "gain_span_db"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def gain_ceiling_db(self) -> float:
        return self.gain_floor_db + self.gain_span_db


def _freeze(values: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(values, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class GridMap:
    """A width x width field of normalized channel gain in [0, 1]."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = _freeze(self.values)
        object.__setattr__(self, "values", values)
        w = self.spec.width_cells
        if values.shape != (w, w):
            raise ValueError(f"values shape {values.shape} does not match spec {w}x{w}")
        if not np.isfinite(values).all():
            raise ValueError("gain values must be finite")
        if values.min() < 0.0 or values.max() > 1.0:
            raise ValueError("normalized gain values must lie in [0, 1]")

    def to_db(self) -> np.ndarray:
        """Denormalized copy of the map in dB."""
        return denormalize_db(self.values, self.spec)


@dataclass(frozen=True)
class Coord:
    """Grid cell index (row, col), both in [0, width_cells)."""

    row: int
    col: int

    def __post_init__(self):
        if self.row < 0 or self.col < 0:
            raise ValueError(f"coordinates must be non-negative, got {self}")

    def check_bounds(self, spec: GridSpec) -> "Coord":
        w = spec.width_cells
        if not (0 <= self.row < w):
            raise ValueError(f"row {self.row} outside [0, {w})")
        if not (0 <= self.col < w):
            raise ValueError(f"col {self.col} outside [0, {w})")
        return self


@dataclass(frozen=True)
class CKMRecord:
    """One AP's stored knowledge: its own coordinate plus its gain map."""

    ap_coord: Coord
    gain: GridMap

    def __post_init__(self):
        self.ap_coord.check_bounds(self.gain.spec)


@dataclass(frozen=True)
class Scenario:
    """All records of one physical environment, sharing one GridSpec."""

    spec: GridSpec
    records: tuple[CKMRecord, ...]
    environment_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if len(self.records) < 1:
            raise ValueError("a scenario needs at least one record")
        for rec in self.records:
            if rec.gain.spec != self.spec:
                raise ValueError(
                    f"record spec {rec.gain.spec} differs from scenario spec {self.spec}"
                )

    @property
    def n_aps(self) -> int:
        return len(self.records)

    def ap_coords(self) -> list[tuple[int, int]]:
        return [(r.ap_coord.row, r.ap_coord.col) for r in self.records]


def drop_record(scenario: Scenario, index: int) -> Scenario:
    """Scenario without record `index` (leave-one-out helper)."""
    if not (0 <= index < scenario.n_aps):
        raise IndexError(f"record index {index} outside [0, {scenario.n_aps})")
    records = scenario.records[:index] + scenario.records[index + 1 :]
    return Scenario(scenario.spec, records, scenario.environment_id)


def normalize_db(gain_db, spec: GridSpec):
    """Map dB gain to [0, 1], clamping outside [floor, floor + span].

    Accepts scalars or arrays. Clamping (rather than erroring) is
    deliberate: simulated deep-shadow cells fall below the floor.
    """
    arr = np.asarray(gain_db, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ValueError("gain_db must be finite")
    clamped = np.clip(arr, spec.gain_floor_db, spec.gain_ceiling_db)
    out = (clamped - spec.gain_floor_db) / spec.gain_span_db
    return float(out) if np.isscalar(gain_db) else out


def denormalize_db(g_norm, spec: GridSpec):
    """Inverse of :func:`normalize_db` on the clamped range."""
    arr = np.asarray(g_norm, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise ValueError("normalized gain must be finite")
    out = spec.gain_floor_db + arr * spec.gain_span_db
    return float(out) if np.isscalar(g_norm) else out


def mse(a: GridMap, b: GridMap, in_db: bool = False) -> float:
    """Mean squared cell difference of two maps on the same spec.

    With ``in_db`` the difference is taken after denormalizing to dB,
    so the result is in dB^2.
    """
    if a.spec != b.spec:
        raise ValueError(f"specs differ: {a.spec} vs {b.spec}")
    if in_db:
        diff = a.to_db() - b.to_db()
    else:
        diff = a.values - b.values
    return float(np.mean(diff * diff))


def mse_to_rmse(mse_value: float) -> float:
    if mse_value < 0:
        raise ValueError(f"mse must be non-negative, got {mse_value}")
    return math.sqrt(mse_value)
