"""Scheme comparison reports and per-sample map exports.

For every leave-one-AP-out validation sample the trained model, the
distance-weighted combination, and the path-loss model all predict the
held-out map; errors are computed in the dB domain. Aggregates land in
an EvalReport ordered proposed / weighted / model-based, together with
per-sample rows and the paired win counts of the model against each
baseline (all schemes score the identical sample set).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assembly import AssemblyConfig, assemble
from .baselines import PathLossConfig, WeightedConfig, pathloss_infer, weighted_infer
from .datasets import encode_gain_png
from .grids import Coord, GridMap, Scenario, drop_record, mse, mse_to_rmse

__all__ = ["EvalReport", "evaluate_all", "export_maps", "model_infer", "map_stats"]


def map_stats(gain: GridMap, threshold_db: float) -> dict:
    """Coverage summary of one predicted map, in dB."""
    db = gain.to_db()
    return {
        "threshold_db": float(threshold_db),
        "coverage_fraction_above_threshold": float(np.mean(db >= threshold_db)),
        "min_db": float(db.min()),
        "max_db": float(db.max()),
        "mean_db": float(db.mean()),
    }


def model_infer(
    model,
    scenario: Scenario,
    target: Coord,
    omega: float,
    exclude_index: int | None = None,
) -> GridMap:
    """Model prediction for one target location, clamped to [0, 1]."""
    pad_to = getattr(getattr(model, "config", None), "in_channels", None)
    stack = assemble(
        scenario, target, AssemblyConfig(omega=omega), exclude_index=exclude_index, pad_to=pad_to
    )
    pred = model.predict_maps(stack.channels[None])[0]
    return GridMap(scenario.spec, np.clip(pred, 0.0, 1.0))


@dataclass
class EvalReport:
    schemes: dict[str, dict] = field(default_factory=dict)  # insertion-ordered rows
    per_sample: list[dict] = field(default_factory=list)
    paired: dict[str, dict] = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def scheme_names(self) -> list[str]:
        return list(self.schemes)

    def to_json(self) -> str:
        doc = {
            "schemes": self.schemes,
            "scheme_order": self.scheme_names(),
            "paired": self.paired,
            "per_sample": self.per_sample,
            "config": self.config,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        names = self.scheme_names()
        lines = ["env_id,ap_index," + ",".join(f"mse_db2_{n}" for n in names)]
        for row in self.per_sample:
            cells = [row["env_id"], str(row["ap_index"])]
            cells += [f"{row['mse_db2'][n]:.6f}" for n in names]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def evaluate_all(
    model,
    scenarios: list[Scenario],
    omega: float = 0.5,
    weighted_cfg: WeightedConfig | None = None,
    pathloss_cfg: PathLossConfig | None = None,
    obstacle_masks: dict[str, np.ndarray] | None = None,
) -> EvalReport:
    """Score every scheme on every leave-one-out pair of `scenarios`.

    Reports an always-LOS path-loss row, plus a mask-based one for
    datasets that ship obstacle masks.
    """
    if not scenarios:
        raise ValueError("empty evaluation split")
    weighted_cfg = weighted_cfg or WeightedConfig()
    pathloss_cfg = pathloss_cfg or PathLossConfig()
    masks = obstacle_masks or {}
    have_masks = all(sc.environment_id in masks for sc in scenarios) and bool(masks)

    names = ["model", "weighted", "pathloss_los"] + (["pathloss_mask"] if have_masks else [])
    report = EvalReport(
        config={
            "omega": omega,
            "weighted_beta": weighted_cfg.beta,
            "pathloss": {
                "freq_ghz": pathloss_cfg.freq_ghz,
                "tx_power_dbm": pathloss_cfg.tx_power_dbm,
                "ap_height_m": pathloss_cfg.ap_height_m,
                "ut_height_m": pathloss_cfg.ut_height_m,
            },
        }
    )

    totals = {n: [] for n in names}
    for sc in scenarios:
        mask = masks.get(sc.environment_id)
        for k, rec in enumerate(sc.records):
            target = rec.ap_coord
            truth = rec.gain
            others = drop_record(sc, k)
            preds = {
                "model": model_infer(model, sc, target, omega, exclude_index=k),
                "weighted": weighted_infer(others, target, weighted_cfg),
                "pathloss_los": pathloss_infer(
                    target, sc.spec, PathLossConfig(**{**_cfg_dict(pathloss_cfg), "los_mode": "always-los"})
                ),
            }
            if have_masks:
                preds["pathloss_mask"] = pathloss_infer(
                    target,
                    sc.spec,
                    PathLossConfig(**{**_cfg_dict(pathloss_cfg), "los_mode": "mask-based"}),
                    obstacle_mask=mask,
                )
            row = {"env_id": sc.environment_id, "ap_index": k, "mse_db2": {}}
            for n in names:
                err = mse(preds[n], truth, in_db=True)
                row["mse_db2"][n] = err
                totals[n].append(err)
            report.per_sample.append(row)

    for n in names:
        agg = float(np.mean(totals[n]))
        report.schemes[n] = {
            "mse_db2": agg,
            "rmse_db": mse_to_rmse(agg),
            "n_samples": len(totals[n]),
        }
    for n in names[1:]:
        wins = sum(
            1 for row in report.per_sample if row["mse_db2"]["model"] < row["mse_db2"][n]
        )
        total = len(report.per_sample)
        report.paired[f"model_vs_{n}"] = {
            "wins": wins,
            "n": total,
            "fraction": wins / total,
        }
    return report


def _cfg_dict(cfg: PathLossConfig) -> dict:
    return {
        "freq_ghz": cfg.freq_ghz,
        "tx_power_dbm": cfg.tx_power_dbm,
        "ap_height_m": cfg.ap_height_m,
        "ut_height_m": cfg.ut_height_m,
        "los_mode": cfg.los_mode,
    }


def export_maps(
    env_id: str,
    ap_index: int,
    truth: GridMap,
    predictions: dict[str, GridMap],
    out_dir: Path | str,
) -> list[Path]:
    """Write truth and per-scheme maps as {env}_{ap}_{scheme}.png plus an MSE sidecar."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    path = out_dir / f"{env_id}_{ap_index}_truth.png"
    encode_gain_png(truth, path)
    written.append(path)
    sidecar = {}
    for scheme, pred in predictions.items():
        path = out_dir / f"{env_id}_{ap_index}_{scheme}.png"
        encode_gain_png(pred, path)
        written.append(path)
        sidecar[scheme] = mse(pred, truth, in_db=True)
    side_path = out_dir / f"{env_id}_{ap_index}_mse.json"
    side_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    written.append(side_path)
    return written
