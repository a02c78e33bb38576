"""Command-line entry point: a thin client over the core package.

Subcommands: gen-data, train, eval, infer, serve. Exit codes: 0 on
success, 2 for configuration/usage errors, 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .baselines import PathLossConfig, WeightedConfig, pathloss_infer, weighted_infer
from .config import ConfigError, RunConfig, load_run_config
from .datasets import (
    encode_gain_png,
    read_dataset,
    read_obstacle_masks,
    write_dataset,
    write_obstacle_mask,
)
from .evaluate import evaluate_all, export_maps, map_stats, model_infer
from .grids import Coord, GridSpec
from .simulate import PropagationParams, gen_environment, gen_scenario
from .train import TrainConfig, train
from .unet import UNet

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crossap",
        description="Cross-AP channel gain map inference toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON or key=value config file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override one config key")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")

    p = sub.add_parser("gen-data", help="generate a synthetic dataset")
    common(p)
    p.add_argument("--maps", type=int, help="number of environments")
    p.add_argument("--aps", type=int, help="APs per environment")
    p.add_argument("--out", required=True, help="dataset output directory")

    p = sub.add_parser("train", help="train the inference model")
    common(p)
    p.add_argument("--data", required=True, help="dataset root")
    p.add_argument("--out", required=True, help="output directory for checkpoint and report")

    p = sub.add_parser("eval", help="compare model and baselines on the validation split")
    common(p)
    p.add_argument("--data", required=True, help="dataset root")
    p.add_argument("--checkpoint", required=True, help="trained model checkpoint")
    p.add_argument("--out", required=True, help="report output directory")
    p.add_argument("--export-maps", type=int, default=0, metavar="N",
                   help="also export prediction images for the first N validation samples")

    p = sub.add_parser("infer", help="predict the gain map for one AP position")
    common(p)
    p.add_argument("--data", required=True, help="dataset root")
    p.add_argument("--checkpoint", required=True, help="trained model checkpoint")
    p.add_argument("--env", required=True, help="environment id")
    p.add_argument("--at", required=True, metavar="ROW,COL", help="target AP cell")
    p.add_argument("--schemes", default="model", help="comma list: model,weighted,pathloss")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("serve", help="run the HTTP inference service")
    common(p)
    p.add_argument("--data", required=True, help="dataset root")
    p.add_argument("--checkpoint", required=True, help="trained model checkpoint")
    p.add_argument("--port", type=int, help="listen port (overrides config)")
    p.add_argument("--host", help="bind address (overrides config)")
    p.add_argument("--ui", help="directory with built frontend assets to serve at /")
    return parser


def _load_cfg(args) -> RunConfig:
    cfg = load_run_config(args.config, args.overrides)
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "maps", None) is not None:
        cfg.generation.maps = args.maps
    if getattr(args, "aps", None) is not None:
        cfg.generation.aps = args.aps
    if getattr(args, "port", None) is not None:
        cfg.service.port = args.port
    if getattr(args, "host", None) is not None:
        cfg.service.host = args.host
    return cfg


def cmd_gen_data(args) -> int:
    cfg = _load_cfg(args)
    g = cfg.grid
    spec = GridSpec(g.width_cells, g.cell_size_m, g.gain_floor_db, g.gain_span_db)
    params = PropagationParams(
        freq_ghz=cfg.propagation.freq_ghz,
        tx_power_dbm=cfg.propagation.tx_power_dbm,
        wall_loss_db=cfg.propagation.wall_loss_db,
        los_exponent=cfg.propagation.los_exponent,
    )
    gen = cfg.generation
    if gen.maps < 1:
        raise ConfigError("generation.maps must be >= 1")
    rng = np.random.default_rng(cfg.seed)
    n_buildings = rng.integers(gen.buildings_min, gen.buildings_max + 1, size=gen.maps)
    env_seeds = rng.integers(0, 2**31 - 1, size=gen.maps)
    ap_seeds = rng.integers(0, 2**31 - 1, size=gen.maps)

    out = Path(args.out)
    scenarios, envs = [], []
    for i in range(gen.maps):
        env = gen_environment(spec, int(n_buildings[i]), int(env_seeds[i]))
        env_id = f"env{i:05d}"
        scenarios.append(gen_scenario(env, gen.aps, int(ap_seeds[i]), params, env_id))
        envs.append((env_id, env))

    n_val = min(gen.maps - 1, max(0, int(round(gen.maps * gen.val_fraction)))) if gen.maps > 1 else 0
    split = {sc.environment_id: "train" for sc in scenarios}
    for sc in scenarios[len(scenarios) - n_val :] if n_val else []:
        split[sc.environment_id] = "val"

    manifest = write_dataset(scenarios, out, split)
    for env_id, env in envs:
        write_obstacle_mask(env.obstacle_mask, out, env_id)
    (out / "genconfig.json").write_text(
        json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    print(f"wrote {len(scenarios)} environments ({len(manifest.split_ids('train'))} train / "
          f"{len(manifest.split_ids('val'))} val) to {out}")
    return 0


def _echo_config(cfg: RunConfig, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "run_config.json").write_text(
        json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"
    )


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    tc = TrainConfig(
        epochs=cfg.train.epochs,
        batch_size=cfg.train.batch_size,
        lr=cfg.train.lr,
        omega=cfg.assembly.omega,
        seed=cfg.seed,
        base_width=cfg.train.base_width,
        depth=cfg.train.depth,
        dataset_root=args.data,
    )
    model, report = train(tc, out_dir=args.out)
    _echo_config(cfg, args.out)
    print(f"best epoch {report.best_epoch}: "
          f"val MSE {report.val_mse_db2[report.best_epoch]:.2f} dB^2 "
          f"({report.wall_clock_sec:.0f} s)")
    return 0


def _pathloss_cfg(cfg: RunConfig, los_mode: str) -> PathLossConfig:
    return PathLossConfig(
        freq_ghz=cfg.propagation.freq_ghz,
        tx_power_dbm=cfg.propagation.tx_power_dbm,
        ap_height_m=cfg.baselines.ap_height_m,
        ut_height_m=cfg.baselines.ut_height_m,
        los_mode=los_mode,
    )


def cmd_eval(args) -> int:
    cfg = _load_cfg(args)
    model, _ = UNet.load(args.checkpoint)
    manifest, scenario_list = read_dataset(args.data)
    by_id = {sc.environment_id: sc for sc in scenario_list}
    val = [by_id[eid] for eid in manifest.split_ids("val")]
    if not val:
        print("dataset has no validation split", file=sys.stderr)
        return 2
    masks = read_obstacle_masks(args.data, [sc.environment_id for sc in val])
    report = evaluate_all(
        model,
        val,
        omega=cfg.assembly.omega,
        weighted_cfg=WeightedConfig(beta=cfg.baselines.beta),
        pathloss_cfg=_pathloss_cfg(cfg, "always-los"),
        obstacle_masks=masks,
    )
    report.config["run_config"] = cfg.to_dict()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "eval_report.json").write_text(report.to_json())
    (out / "eval_per_sample.csv").write_text(report.to_csv())
    for scheme, row in report.schemes.items():
        print(f"{scheme:>14}: MSE {row['mse_db2']:8.2f} dB^2   RMSE {row['rmse_db']:6.2f} dB")
    if args.export_maps > 0:
        n = 0
        for sc in val:
            for k, rec in enumerate(sc.records):
                if n >= args.export_maps:
                    break
                preds = {
                    "model": model_infer(model, sc, rec.ap_coord, cfg.assembly.omega, exclude_index=k),
                }
                export_maps(sc.environment_id, k, rec.gain, preds, out / "maps")
                n += 1
    return 0


def cmd_infer(args) -> int:
    cfg = _load_cfg(args)
    try:
        row_s, col_s = args.at.split(",")
        row, col = int(row_s), int(col_s)
    except ValueError as exc:
        raise ConfigError(f"--at expects ROW,COL integers, got {args.at!r}") from exc
    model, _ = UNet.load(args.checkpoint)
    manifest, scenario_list = read_dataset(args.data)
    by_id = {sc.environment_id: sc for sc in scenario_list}
    sc = by_id.get(args.env)
    if sc is None:
        raise ConfigError(f"unknown environment {args.env!r}; dataset has {sorted(by_id)[:5]}...")
    try:
        coord = Coord(row, col).check_bounds(sc.spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    masks = read_obstacle_masks(args.data, [args.env])
    mask = masks.get(args.env)
    if mask is not None and mask[row, col]:
        raise ConfigError(f"cell ({row}, {col}) lies inside an obstacle")

    schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stats = {}
    for scheme in schemes:
        if scheme == "model":
            gain = model_infer(model, sc, coord, cfg.assembly.omega)
        elif scheme == "weighted":
            gain = weighted_infer(sc, coord, WeightedConfig(beta=cfg.baselines.beta))
        elif scheme == "pathloss":
            mode = "mask-based" if mask is not None else "always-los"
            gain = pathloss_infer(coord, sc.spec, _pathloss_cfg(cfg, mode), obstacle_mask=mask)
        else:
            raise ConfigError(f"unknown scheme {scheme!r}")
        path = out / f"infer_{args.env}_r{row}c{col}_{scheme}.png"
        encode_gain_png(gain, path)
        stats[scheme] = map_stats(gain, cfg.service.coverage_threshold_db)
        print(f"wrote {path}")
    (out / f"infer_{args.env}_r{row}c{col}_stats.json").write_text(
        json.dumps({"stats": stats, "config": cfg.to_dict()}, indent=2, sort_keys=True) + "\n"
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    cfg = _load_cfg(args)
    app = create_app(args.checkpoint, args.data, cfg, static_dir=args.ui)
    uvicorn.run(app, host=cfg.service.host, port=cfg.service.port)
    return 0


_COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "infer": cmd_infer,
    "serve": cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failures map to exit 1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
