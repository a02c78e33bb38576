"""Benchmark inference schemes.

Two reference predictors to compare the learned model against:

* distance-weighted combination: the target map is a softmax-weighted
  sum of the existing APs' maps, with weights exp(-beta * d) over the
  Euclidean AP distances in meters;
* 3GPP TR 38.901 urban-microcell street-canyon path loss, evaluated on
  the 3D distance from the target AP, optionally switching to the NLOS
  formula when the 2D ray to a cell crosses an obstacle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import Coord, GridMap, GridSpec, Scenario, normalize_db
from .simulate import wall_count_map

__all__ = [
    "WeightedConfig",
    "PathLossConfig",
    "softmax_weights",
    "weighted_infer",
    "pathloss_infer",
    "umi_pathloss_db",
]


@dataclass(frozen=True)
class WeightedConfig:
    beta: float = 0.1  # per-meter decay of the distance weighting

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")


@dataclass(frozen=True)
class PathLossConfig:
    freq_ghz: float = 3.5
    tx_power_dbm: float = 30.0
    ap_height_m: float = 10.0
    ut_height_m: float = 1.5
    los_mode: str = "always-los"  # "always-los" | "mask-based"

    def __post_init__(self):
        if self.ap_height_m <= 0 or self.ut_height_m <= 0:
            raise ValueError("heights must be positive")
        if self.los_mode not in ("always-los", "mask-based"):
            raise ValueError(f"unknown los_mode {self.los_mode!r}")


def softmax_weights(
    target: Coord,
    ap_coords: list[Coord],
    beta: float,
    cell_size_m: float = 1.0,
) -> np.ndarray:
    """Normalized exp(-beta * d) weights over AP distances in meters.

    Computed with max-subtraction so large beta*d products cannot
    underflow the whole weight vector.
    """
    if not ap_coords:
        raise ValueError("need at least one AP")
    d = np.array(
        [math.hypot(target.row - c.row, target.col - c.col) * cell_size_m for c in ap_coords]
    )
    logits = -beta * d
    logits -= logits.max()
    w = np.exp(logits)
    return w / w.sum()


def weighted_infer(scenario: Scenario, target: Coord, config: WeightedConfig) -> GridMap:
    """Cellwise convex combination of the existing gain maps."""
    target.check_bounds(scenario.spec)
    coords = [rec.ap_coord for rec in scenario.records]
    w = softmax_weights(target, coords, config.beta, scenario.spec.cell_size_m)
    acc = np.zeros_like(scenario.records[0].gain.values)
    for wn, rec in zip(w, scenario.records):
        acc += wn * rec.gain.values
    return GridMap(scenario.spec, np.clip(acc, 0.0, 1.0))


def umi_pathloss_db(d3d_m, freq_ghz: float, ut_height_m: float, los: bool = True):
    """TR 38.901 UMi street-canyon path loss (below breakpoint distance).

    LOS:  32.4 + 21 log10(d3D) + 20 log10(f)
    NLOS: max(LOS, 22.4 + 35.3 log10(d3D) + 21.3 log10(f) - 0.3 (h_UT - 1.5))
    """
    d = np.maximum(np.asarray(d3d_m, dtype=np.float64), 1.0)
    pl_los = 32.4 + 21.0 * np.log10(d) + 20.0 * math.log10(freq_ghz)
    if los:
        return pl_los
    pl_nlos = (
        22.4
        + 35.3 * np.log10(d)
        + 21.3 * math.log10(freq_ghz)
        - 0.3 * (ut_height_m - 1.5)
    )
    return np.maximum(pl_los, pl_nlos)


def pathloss_infer(
    target: Coord,
    spec: GridSpec,
    config: PathLossConfig,
    obstacle_mask: np.ndarray | None = None,
) -> GridMap:
    """Model-based prediction from the target location alone.

    Uses the 3D distance between an AP at `ap_height_m` and terminals at
    `ut_height_m` (clamped to 1 m). In mask-based mode, cells whose 2D
    ray from the AP crosses an obstacle get the NLOS formula.
    """
    target.check_bounds(spec)
    w = spec.width_cells
    rows, cols = np.mgrid[0:w, 0:w]
    d2d = np.hypot(rows - target.row, cols - target.col) * spec.cell_size_m
    dh = config.ap_height_m - config.ut_height_m
    d3d = np.maximum(np.sqrt(d2d * d2d + dh * dh), 1.0)

    pl = umi_pathloss_db(d3d, config.freq_ghz, config.ut_height_m, los=True)
    if config.los_mode == "mask-based" and obstacle_mask is not None:
        nlos_pl = umi_pathloss_db(d3d, config.freq_ghz, config.ut_height_m, los=False)
        nlos = wall_count_map(obstacle_mask, (target.row, target.col)) > 0
        pl = np.where(nlos, nlos_pl, pl)
    gain_db = config.tx_power_dbm - pl
    return GridMap(spec, normalize_db(gain_db, spec))
