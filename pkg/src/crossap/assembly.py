"""Model input assembly.

A training or inference input is an (N+1)-channel stack: channel 0 is
the target AP's one-hot location map dilated by a 3x3 all-ones kernel
(so the sparse location survives 5x5 convolutions), and channels 1..N
are the remaining APs' feature maps, each the blend

    (1 - omega) * gain + omega * one_hot(ap_location).

In training mode the target AP's own record is excluded from the stack
entirely; the supervision target never appears in the input. Scenarios
supplying fewer feature maps than the stack width are padded with
all-zero channels at the end, preserving record order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import CKMRecord, Coord, GridSpec, Scenario

__all__ = [
    "AssemblyConfig",
    "InputStack",
    "one_hot_map",
    "feature_map",
    "preconvolve_target",
    "assemble",
]


@dataclass(frozen=True)
class AssemblyConfig:
    """omega in [0, 1] sets how strongly AP locations are highlighted."""

    omega: float = 0.5

    def __post_init__(self):
        if not (0.0 <= self.omega <= 1.0):
            raise ValueError(f"omega must lie in [0, 1], got {self.omega}")


@dataclass(frozen=True)
class InputStack:
    """Assembled (n_channels, W, W) model input; channel 0 is the target map."""

    channels: np.ndarray
    target: Coord

    def __post_init__(self):
        arr = np.ascontiguousarray(self.channels, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "channels", arr)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise ValueError(f"expected (C, W, W) channels, got shape {arr.shape}")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("stack values must lie in [0, 1]")
        ch0 = arr[0]
        if not np.isin(ch0, (0.0, 1.0)).all():
            raise ValueError("channel 0 must be binary")

    @property
    def n_channels(self) -> int:
        return self.channels.shape[0]


def one_hot_map(coord: Coord, spec: GridSpec) -> np.ndarray:
    """Binary W x W map with a single 1 at `coord`."""
    coord.check_bounds(spec)
    out = np.zeros((spec.width_cells, spec.width_cells), dtype=np.float64)
    out[coord.row, coord.col] = 1.0
    return out


def feature_map(record: CKMRecord, omega: float) -> np.ndarray:
    """(1 - omega) * gain + omega * one_hot(ap location)."""
    if not (0.0 <= omega <= 1.0):
        raise ValueError(f"omega must lie in [0, 1], got {omega}")
    out = (1.0 - omega) * record.gain.values.copy()
    out[record.ap_coord.row, record.ap_coord.col] += omega
    return out


def preconvolve_target(loc_map: np.ndarray) -> np.ndarray:
    """Dilate a one-hot location map with the 3x3 all-ones kernel.

    Zero-padded convolution then clamp to {0, 1}: an interior AP turns
    into a 3x3 block of ones, clipped at edges and corners.
    """
    loc = np.asarray(loc_map, dtype=np.float64)
    if loc.ndim != 2 or not np.isin(loc, (0.0, 1.0)).all() or loc.sum() != 1.0:
        raise ValueError("pre-convolution input must be a one-hot map")
    r, c = np.unravel_index(int(np.argmax(loc)), loc.shape)
    out = np.zeros_like(loc)
    out[max(r - 1, 0) : r + 2, max(c - 1, 0) : c + 2] = 1.0
    return out


def assemble(
    scenario: Scenario,
    target_coord: Coord,
    config: AssemblyConfig,
    exclude_index: int | None = None,
    pad_to: int | None = None,
) -> InputStack:
    """Build the model input for one target location.

    Training mode passes `exclude_index`, the record whose map is the
    supervision target; its coordinate must equal `target_coord` and its
    gain map is masked out of the stack. Inference mode (no exclusion)
    uses every record. `pad_to` fixes the total channel count for models
    trained at a specific width; missing feature maps become all-zero
    channels and excess records are an error.
    """
    target_coord.check_bounds(scenario.spec)
    if exclude_index is not None:
        if not (0 <= exclude_index < scenario.n_aps):
            raise IndexError(f"exclude_index {exclude_index} outside [0, {scenario.n_aps})")
        excluded = scenario.records[exclude_index]
        if (excluded.ap_coord.row, excluded.ap_coord.col) != (
            target_coord.row,
            target_coord.col,
        ):
            raise ValueError(
                f"exclude_index {exclude_index} is at {excluded.ap_coord}, "
                f"not at the target {target_coord}"
            )

    features = [
        feature_map(rec, config.omega)
        for k, rec in enumerate(scenario.records)
        if k != exclude_index
    ]
    n_channels = pad_to if pad_to is not None else len(features) + 1
    if len(features) + 1 > n_channels:
        raise ValueError(
            f"{len(features)} feature maps do not fit a {n_channels}-channel stack"
        )

    w = scenario.spec.width_cells
    stack = np.zeros((n_channels, w, w), dtype=np.float64)
    stack[0] = preconvolve_target(one_hot_map(target_coord, scenario.spec))
    for i, fm in enumerate(features):
        stack[1 + i] = fm
    return InputStack(stack, target_coord)
