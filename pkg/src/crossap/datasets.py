"""Dataset persistence and loading.

On-disk layout (see docs/formats.md):

    root/manifest.json              version, grid spec, env list with splits
    root/<env_id>/ap_<k>.json       AP coordinate plus dB-scale metadata
    root/<env_id>/gain_<k>.png      8-bit grayscale, pixel v = normalized gain v/255
    root/<env_id>/obstacle.png      optional building mask (255 = building)

Gain maps round-trip losslessly up to the 8-bit quantization step
(<= 1/510 per cell). Splits are assigned per environment, never per AP,
so no environment contributes to both train and validation.

The RadioMapSeer adapter targets the "one folder of gain images per
map, index-encoded AP" convention: ``root/gain/<env>_<k>.png`` with an
optional ``root/antenna/<env>_<k>.png`` one-hot location image. When no
location image exists the AP cell is recovered as the argmax-gain pixel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .grids import CKMRecord, Coord, GridMap, GridSpec, Scenario

__all__ = [
    "DatasetManifest",
    "EnvEntry",
    "MANIFEST_VERSION",
    "write_dataset",
    "read_dataset",
    "read_radiomapseer",
    "write_obstacle_mask",
    "read_obstacle_masks",
    "encode_gain_png",
    "decode_gain_png",
]

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class EnvEntry:
    env_id: str
    n_aps: int
    split: str  # "train" | "val"

    def __post_init__(self):
        if self.split not in ("train", "val"):
            raise ValueError(f"split must be 'train' or 'val', got {self.split!r}")


@dataclass(frozen=True)
class DatasetManifest:
    version: int
    spec: GridSpec
    environments: tuple[EnvEntry, ...]

    def split_ids(self, split: str) -> list[str]:
        return [e.env_id for e in self.environments if e.split == split]

    def to_json(self) -> str:
        doc = {
            "version": self.version,
            "grid": {
                "width_cells": self.spec.width_cells,
                "cell_size_m": self.spec.cell_size_m,
                "gain_floor_db": self.spec.gain_floor_db,
                "gain_span_db": self.spec.gain_span_db,
            },
            "environments": [
                {"id": e.env_id, "n_aps": e.n_aps, "split": e.split}
                for e in self.environments
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        doc = json.loads(text)
        if doc.get("version") != MANIFEST_VERSION:
            raise ValueError(f"unsupported manifest version {doc.get('version')!r}")
        g = doc["grid"]
        spec = GridSpec(
            width_cells=int(g["width_cells"]),
            cell_size_m=float(g["cell_size_m"]),
            gain_floor_db=float(g["gain_floor_db"]),
            gain_span_db=float(g["gain_span_db"]),
        )
        envs = tuple(
            EnvEntry(str(e["id"]), int(e["n_aps"]), str(e["split"]))
            for e in doc["environments"]
        )
        return cls(int(doc["version"]), spec, envs)


def encode_gain_png(gain: GridMap, path: Path) -> None:
    """8-bit grayscale encoding, round-half-up: pixel = floor(g * 255 + 0.5)."""
    pixels = np.floor(gain.values * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(pixels, mode="L").save(path, format="PNG")


def decode_gain_png(path: Path, spec: GridSpec) -> GridMap:
    with Image.open(path) as img:
        if img.mode != "L":
            img = img.convert("L")
        pixels = np.asarray(img, dtype=np.uint8)
    w = spec.width_cells
    if pixels.shape != (w, w):
        raise ValueError(f"{path}: image is {pixels.shape}, expected {w}x{w}")
    return GridMap(spec, pixels.astype(np.float64) / 255.0)


def _default_split(env_ids: list[str]) -> dict[str, str]:
    # last fifth of the environment list validates; the rest trains
    n_val = len(env_ids) // 5
    split = {eid: "train" for eid in env_ids}
    for eid in env_ids[len(env_ids) - n_val :]:
        split[eid] = "val"
    return split


def write_dataset(
    scenarios: list[Scenario],
    root: Path | str,
    split: dict[str, str] | None = None,
) -> DatasetManifest:
    """Persist scenarios under `root` and return the written manifest.

    `split` maps environment id to "train"/"val"; by default the last
    fifth of the scenario list (by position) becomes the validation set.
    """
    if not scenarios:
        raise ValueError("cannot write an empty dataset")
    spec = scenarios[0].spec
    for sc in scenarios:
        if sc.spec != spec:
            raise ValueError("all scenarios in one dataset must share a GridSpec")
    ids = [sc.environment_id for sc in scenarios]
    if len(set(ids)) != len(ids):
        raise ValueError("environment ids must be unique within a dataset")
    if split is None:
        split = _default_split(ids)
    missing = [eid for eid in ids if eid not in split]
    if missing:
        raise ValueError(f"split assignment missing environments: {missing}")

    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for sc in scenarios:
        env_dir = root / sc.environment_id
        env_dir.mkdir(exist_ok=True)
        for k, rec in enumerate(sc.records):
            meta = {
                "row": rec.ap_coord.row,
                "col": rec.ap_coord.col,
                "gain_floor_db": spec.gain_floor_db,
                "gain_span_db": spec.gain_span_db,
            }
            (env_dir / f"ap_{k}.json").write_text(
                json.dumps(meta, indent=2, sort_keys=True) + "\n"
            )
            encode_gain_png(rec.gain, env_dir / f"gain_{k}.png")
        entries.append(EnvEntry(sc.environment_id, sc.n_aps, split[sc.environment_id]))

    manifest = DatasetManifest(MANIFEST_VERSION, spec, tuple(entries))
    (root / "manifest.json").write_text(manifest.to_json())
    return manifest


def read_dataset(root: Path | str) -> tuple[DatasetManifest, list[Scenario]]:
    root = Path(root)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"manifest not found: {manifest_path}")
    manifest = DatasetManifest.from_json(manifest_path.read_text())
    spec = manifest.spec
    scenarios = []
    for entry in manifest.environments:
        env_dir = root / entry.env_id
        records = []
        for k in range(entry.n_aps):
            meta_path = env_dir / f"ap_{k}.json"
            gain_path = env_dir / f"gain_{k}.png"
            for p in (meta_path, gain_path):
                if not p.exists():
                    raise FileNotFoundError(f"dataset file listed in manifest is missing: {p}")
            meta = json.loads(meta_path.read_text())
            coord = Coord(int(meta["row"]), int(meta["col"]))
            records.append(CKMRecord(coord, decode_gain_png(gain_path, spec)))
        scenarios.append(Scenario(spec, tuple(records), entry.env_id))
    return manifest, scenarios


def write_obstacle_mask(mask: np.ndarray, root: Path | str, env_id: str) -> Path:
    """Optional per-environment building mask (not part of the core layout)."""
    path = Path(root) / env_id / "obstacle.png"
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)
    Image.fromarray(pixels, mode="L").save(path, format="PNG")
    return path


def read_obstacle_masks(root: Path | str, env_ids: list[str]) -> dict[str, np.ndarray]:
    """Masks for the environments that have one; absent files are skipped."""
    out = {}
    for eid in env_ids:
        path = Path(root) / eid / "obstacle.png"
        if path.exists():
            with Image.open(path) as img:
                out[eid] = np.asarray(img.convert("L")) >= 128
    return out


def _argmax_coord(values: np.ndarray) -> Coord:
    """Cell of the maximal value; ties resolve to the cell nearest the
    tied set's centroid (the distance clamp at the AP's own cell makes
    it tie with its axis neighbors in a plus shape, whose centroid is
    the AP itself)."""
    tied = np.argwhere(values == values.max())
    if len(tied) == 1:
        return Coord(int(tied[0][0]), int(tied[0][1]))
    center = tied.mean(axis=0)
    dist = np.abs(tied - center).sum(axis=1)
    best = tied[int(np.argmin(dist))]
    return Coord(int(best[0]), int(best[1]))


def read_radiomapseer(
    root: Path | str,
    env_ids: list[str],
    spec: GridSpec,
    max_aps: int = 80,
) -> list[Scenario]:
    """Load RadioMapSeer-style gain folders into Scenarios.

    Expects ``root/gain/<env>_<k>.png`` for k = 0, 1, ... (up to
    `max_aps` per environment) and optionally ``root/antenna/<env>_<k>.png``
    one-hot AP location images. Without a location image the AP cell is
    taken as the argmax-gain pixel.
    """
    root = Path(root)
    gain_dir = root / "gain"
    if not gain_dir.is_dir():
        raise FileNotFoundError(
            f"external dataset not found: expected gain folder at {gain_dir}"
        )
    scenarios = []
    for eid in env_ids:
        records = []
        for k in range(max_aps):
            gain_path = gain_dir / f"{eid}_{k}.png"
            if not gain_path.exists():
                break
            gain = decode_gain_png(gain_path, spec)
            antenna_path = root / "antenna" / f"{eid}_{k}.png"
            if antenna_path.exists():
                with Image.open(antenna_path) as img:
                    coord = _argmax_coord(np.asarray(img.convert("L")))
            else:
                coord = _argmax_coord(gain.values)
            records.append(CKMRecord(coord, gain))
        if not records:
            raise FileNotFoundError(f"no gain images for environment {eid!r} under {gain_dir}")
        scenarios.append(Scenario(spec, tuple(records), eid))
    return scenarios
