"""Synthetic scenario generator: building layouts and per-AP gain maps.

The propagation model is free-space path loss plus a fixed penetration
loss per obstacle cell crossed. Obstacle crossings are counted by exact
grid ray traversal (integer line stepping between cell centers), so the
maps show the hard building shadows a learned model has to pick up,
while staying fully deterministic for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import CKMRecord, Coord, GridMap, GridSpec, Scenario, normalize_db

__all__ = [
    "Environment",
    "PropagationParams",
    "gen_environment",
    "simulate_cgm",
    "gen_scenario",
    "trace_cells",
    "count_walls",
    "wall_count_map",
    "fspl_db",
]

MAX_OBSTACLE_FRACTION = 0.6
_GEN_RETRIES = 25


@dataclass(frozen=True)
class Environment:
    """One physical layout: a boolean building mask over the grid."""

    spec: GridSpec
    obstacle_mask: np.ndarray
    seed: int

    def __post_init__(self):
        mask = np.ascontiguousarray(self.obstacle_mask, dtype=bool)
        mask.setflags(write=False)
        object.__setattr__(self, "obstacle_mask", mask)
        w = self.spec.width_cells
        if mask.shape != (w, w):
            raise ValueError(f"mask shape {mask.shape} does not match spec {w}x{w}")
        frac = float(mask.mean())
        if frac > MAX_OBSTACLE_FRACTION:
            raise ValueError(f"obstacle fraction {frac:.2f} above {MAX_OBSTACLE_FRACTION}")

    @property
    def free_fraction(self) -> float:
        return 1.0 - float(self.obstacle_mask.mean())

    def free_cells(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(~self.obstacle_mask)
        return list(zip(rows.tolist(), cols.tolist()))


@dataclass(frozen=True)
class PropagationParams:
    freq_ghz: float = 3.5
    tx_power_dbm: float = 30.0
    wall_loss_db: float = 15.0
    los_exponent: float = 2.0

    def __post_init__(self):
        for name in ("freq_ghz", "tx_power_dbm", "wall_loss_db", "los_exponent"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.freq_ghz <= 0:
            raise ValueError("freq_ghz must be positive")
        if self.wall_loss_db < 0:
            raise ValueError("wall_loss_db must be >= 0")


def fspl_db(distance_m: float, freq_ghz: float, exponent: float = 2.0):
    """Free-space path loss; the 32.45 constant folds meters and GHz."""
    d = np.maximum(np.asarray(distance_m, dtype=np.float64), 1e-9)
    return 10.0 * exponent * np.log10(d) + 20.0 * math.log10(freq_ghz) + 32.45


def gen_environment(spec: GridSpec, n_buildings: int, seed: int) -> Environment:
    """Deterministic layout of axis-aligned rectangular buildings.

    Rectangles may overlap; layouts that leave less than 40% of cells
    free are redrawn a bounded number of times before giving up.
    """
    if n_buildings < 0:
        raise ValueError("n_buildings must be >= 0")
    w = spec.width_cells
    rng = np.random.default_rng(seed)
    side_lo = max(2, w // 16)
    side_hi = max(side_lo + 1, w // 5)
    for _ in range(_GEN_RETRIES):
        mask = np.zeros((w, w), dtype=bool)
        for _ in range(n_buildings):
            bh = int(rng.integers(side_lo, side_hi + 1))
            bw = int(rng.integers(side_lo, side_hi + 1))
            r = int(rng.integers(0, w - bh + 1))
            c = int(rng.integers(0, w - bw + 1))
            mask[r : r + bh, c : c + bw] = True
        if mask.mean() <= MAX_OBSTACLE_FRACTION:
            return Environment(spec, mask, seed)
    raise RuntimeError(
        f"could not satisfy free-cell quota with {n_buildings} buildings "
        f"on a {w}x{w} grid after {_GEN_RETRIES} attempts"
    )


def trace_cells(a: tuple[int, int], b: tuple[int, int]) -> list[tuple[int, int]]:
    """Cells strictly intersected by the segment between cell centers.

    Integer line stepping: the comparison of the next row/column line
    crossing is done in exact integer arithmetic, and an exact corner
    crossing advances diagonally (neither corner-touching neighbor is
    strictly intersected). The start cell is excluded; the end cell is
    the last element when a != b.
    """
    r0, c0 = a
    r1, c1 = b
    adr, adc = abs(r1 - r0), abs(c1 - c0)
    sr = 1 if r1 >= r0 else -1
    sc = 1 if c1 >= c0 else -1
    cells: list[tuple[int, int]] = []
    r, c, i, j = r0, c0, 0, 0
    while i < adr or j < adc:
        if j >= adc:
            r += sr
            i += 1
        elif i >= adr:
            c += sc
            j += 1
        else:
            lhs = (2 * i + 1) * adc
            rhs = (2 * j + 1) * adr
            if lhs < rhs:
                r += sr
                i += 1
            elif rhs < lhs:
                c += sc
                j += 1
            else:
                r += sr
                c += sc
                i += 1
                j += 1
        cells.append((r, c))
    return cells


def count_walls(mask: np.ndarray, a: tuple[int, int], b: tuple[int, int]) -> int:
    """Obstacle cells strictly intersected by segment a->b, endpoints excluded."""
    cells = trace_cells(a, b)
    if cells:
        cells = cells[:-1]
    return int(sum(bool(mask[r, c]) for r, c in cells))


def wall_count_map(mask: np.ndarray, ap: tuple[int, int]) -> np.ndarray:
    """Wall counts from one AP to every cell.

    Targets colinear with the AP share a traversal prefix, so rays are
    walked once per primitive direction and counts are read off at each
    intermediate cell center on the way out.
    """
    w = mask.shape[0]
    r0, c0 = ap
    counts = np.zeros((w, w), dtype=np.int32)
    # farthest multiple seen per primitive direction
    prims: dict[tuple[int, int], int] = {}
    for r in range(w):
        dr = r - r0
        for c in range(w):
            dc = c - c0
            if dr == 0 and dc == 0:
                continue
            g = math.gcd(abs(dr), abs(dc))
            key = (dr // g, dc // g)
            if prims.get(key, 0) < g:
                prims[key] = g
    for (pr, pc), gmax in prims.items():
        acc = 0
        k = 1
        target = (r0 + pr, c0 + pc)
        for cell in trace_cells((r0, c0), (r0 + pr * gmax, c0 + pc * gmax)):
            if cell == target:
                counts[cell] = acc
                k += 1
                target = (r0 + pr * k, c0 + pc * k)
            if mask[cell]:
                acc += 1
    return counts


def simulate_cgm(env: Environment, ap: Coord, params: PropagationParams) -> GridMap:
    """Gain map of one AP: tx power minus FSPL minus per-wall losses."""
    ap.check_bounds(env.spec)
    if env.obstacle_mask[ap.row, ap.col]:
        raise ValueError(f"AP at ({ap.row}, {ap.col}) lies inside an obstacle")
    spec = env.spec
    w = spec.width_cells
    rows, cols = np.mgrid[0:w, 0:w]
    dist = np.hypot(rows - ap.row, cols - ap.col) * spec.cell_size_m
    dist = np.maximum(dist, spec.cell_size_m)
    walls = wall_count_map(env.obstacle_mask, (ap.row, ap.col))
    gain_db = (
        params.tx_power_dbm
        - fspl_db(dist, params.freq_ghz, params.los_exponent)
        - params.wall_loss_db * walls
    )
    return GridMap(spec, normalize_db(gain_db, spec))


def gen_scenario(
    env: Environment,
    n_aps: int,
    seed: int,
    params: PropagationParams | None = None,
    environment_id: str | None = None,
) -> Scenario:
    """Scenario with n_aps APs sampled uniformly from free cells."""
    if n_aps < 2:
        raise ValueError("n_aps must be >= 2")
    params = params or PropagationParams()
    free = env.free_cells()
    if len(free) < n_aps:
        raise ValueError(f"only {len(free)} free cells for {n_aps} APs")
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(free), size=n_aps, replace=False)
    records = []
    for idx in picks:
        coord = Coord(*free[int(idx)])
        records.append(CKMRecord(coord, simulate_cgm(env, coord, params)))
    env_id = environment_id if environment_id is not None else f"env{env.seed:05d}"
    return Scenario(env.spec, tuple(records), env_id)
