"""Round-robin target-AP training with validation-based checkpointing.

Every epoch visits every (scenario, AP) pair of the training split once,
in an order shuffled deterministically by (seed, epoch). For each sample
the target AP's record is excluded from the assembled input, the network
predicts its map, and the normalized-domain MSE drives an Adam update.
After each epoch the model is scored on the validation split in dB^2,
and the parameters with the lowest validation MSE are the ones returned.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import engine
from .assembly import AssemblyConfig, assemble
from .datasets import read_dataset
from .grids import Scenario, denormalize_db, mse_to_rmse
from .unet import UNet, UNetConfig, build

__all__ = [
    "TrainConfig",
    "TrainReport",
    "make_epoch_samples",
    "train",
    "validate",
    "best_epoch_index",
]

_VAL_BATCH = 16


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 15
    batch_size: int = 15
    lr: float = 1e-3
    omega: float = 0.5
    seed: int = 0
    base_width: int = 32
    depth: int = 4
    extra_conv_levels: tuple[int, ...] | None = None
    dataset_root: str | None = None

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr": self.lr,
            "omega": self.omega,
            "seed": self.seed,
            "base_width": self.base_width,
            "depth": self.depth,
            "extra_conv_levels": list(self.extra_conv_levels)
            if self.extra_conv_levels is not None
            else None,
            "dataset_root": self.dataset_root,
        }


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)  # normalized units
    val_mse_db2: list[float] = field(default_factory=list)
    best_epoch: int = 0
    wall_clock_sec: float = 0.0
    n_train_samples: int = 0
    n_val_samples: int = 0
    config: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "train_loss": self.train_loss,
            "val_mse_db2": self.val_mse_db2,
            "val_rmse_db": [mse_to_rmse(v) for v in self.val_mse_db2],
            "best_epoch": self.best_epoch,
            "wall_clock_sec": self.wall_clock_sec,
            "n_train_samples": self.n_train_samples,
            "n_val_samples": self.n_val_samples,
            "config": self.config,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def best_epoch_index(val_curve: list[float]) -> int:
    """Index of the minimal validation error (first one on ties)."""
    if not val_curve:
        raise ValueError("empty validation curve")
    return int(np.argmin(val_curve))


def make_epoch_samples(
    scenarios: list[Scenario], seed: int, epoch: int
) -> list[tuple[int, int]]:
    """Each (scenario, AP) pair exactly once, shuffled by (seed, epoch)."""
    if not scenarios:
        raise ValueError("empty training split")
    pairs = [(si, ai) for si, sc in enumerate(scenarios) for ai in range(sc.n_aps)]
    rng = np.random.default_rng([seed, epoch])
    order = rng.permutation(len(pairs))
    return [pairs[i] for i in order]


def _assemble_batch(
    scenarios: list[Scenario],
    samples: list[tuple[int, int]],
    omega: float,
    pad_to: int,
) -> tuple[np.ndarray, np.ndarray]:
    cfg = AssemblyConfig(omega=omega)
    stacks, targets = [], []
    for si, ai in samples:
        sc = scenarios[si]
        rec = sc.records[ai]
        stack = assemble(sc, rec.ap_coord, cfg, exclude_index=ai, pad_to=pad_to)
        truth = rec.gain.values
        # leave-one-out discipline: the supervision map must not appear as input
        for ch in stack.channels:
            if np.array_equal(ch, truth):
                raise AssertionError(
                    f"ground-truth leak: target map of AP {ai} in {sc.environment_id} "
                    "appears in its own input stack"
                )
        stacks.append(stack.channels)
        targets.append(truth[None])
    return np.stack(stacks), np.stack(targets)


def validate(model, scenarios: list[Scenario], omega: float) -> tuple[float, float]:
    """Leave-one-AP-out validation error: (mean MSE in dB^2, RMSE in dB).

    `model` only needs a `predict_maps(stacks) -> (B, W, W)` method;
    predictions are clamped to [0, 1] before denormalizing.
    """
    if not scenarios:
        raise ValueError("empty validation split")
    pad_to = getattr(getattr(model, "config", None), "in_channels", None)
    if pad_to is None:
        pad_to = max(sc.n_aps for sc in scenarios) + 1
    samples = [(si, ai) for si, sc in enumerate(scenarios) for ai in range(sc.n_aps)]
    per_sample = []
    for start in range(0, len(samples), _VAL_BATCH):
        chunk = samples[start : start + _VAL_BATCH]
        x, t = _assemble_batch(scenarios, chunk, omega, pad_to)
        preds = np.clip(model.predict_maps(x), 0.0, 1.0)
        for bi, (si, ai) in enumerate(chunk):
            spec = scenarios[si].spec
            diff = denormalize_db(preds[bi], spec) - denormalize_db(t[bi, 0], spec)
            per_sample.append(float(np.mean(diff * diff)))
    mse_db2 = float(np.mean(per_sample))
    return mse_db2, mse_to_rmse(mse_db2)


def train(
    config: TrainConfig,
    train_scenarios: list[Scenario] | None = None,
    val_scenarios: list[Scenario] | None = None,
    out_dir: Path | str | None = None,
) -> tuple[UNet, TrainReport]:
    """Run the full training loop; returns the best-validation model.

    Scenarios can be passed directly or read from config.dataset_root
    using the manifest's environment-level splits.
    """
    t0 = time.perf_counter()
    if train_scenarios is None or val_scenarios is None:
        if config.dataset_root is None:
            raise ValueError("need scenarios or a dataset_root to train on")
        manifest, all_scenarios = read_dataset(config.dataset_root)
        by_id = {sc.environment_id: sc for sc in all_scenarios}
        train_scenarios = [by_id[eid] for eid in manifest.split_ids("train")]
        val_scenarios = [by_id[eid] for eid in manifest.split_ids("val")]
    if not train_scenarios or not val_scenarios:
        raise ValueError("both train and validation splits must be non-empty")

    in_channels = max(sc.n_aps for sc in train_scenarios + val_scenarios) + 1
    model_cfg = UNetConfig(
        in_channels=in_channels,
        base_width=config.base_width,
        depth=config.depth,
        extra_conv_levels=config.extra_conv_levels,
    )
    model = build(model_cfg, seed=config.seed)
    adam = engine.AdamState(lr=config.lr)

    report = TrainReport(config=config.to_dict())
    report.n_train_samples = sum(sc.n_aps for sc in train_scenarios)
    report.n_val_samples = sum(sc.n_aps for sc in val_scenarios)

    best_state: dict[str, np.ndarray] | None = None
    for epoch in range(config.epochs):
        samples = make_epoch_samples(train_scenarios, config.seed, epoch)
        total, count = 0.0, 0
        for start in range(0, len(samples), config.batch_size):
            batch = samples[start : start + config.batch_size]
            x, t = _assemble_batch(train_scenarios, batch, config.omega, in_channels)
            y = model.forward(x.astype(model.dtype), cache=True)
            loss, dy = engine.mse_loss(y, t.astype(model.dtype))
            if not np.isfinite(loss):
                raise FloatingPointError(
                    f"non-finite loss at epoch {epoch}, samples {batch}"
                )
            model.zero_grad()
            model.backward(dy)
            engine.adam_step(model.params, adam)
            total += loss * len(batch)
            count += len(batch)
        report.train_loss.append(total / count)

        val_mse, _ = validate(model, val_scenarios, config.omega)
        report.val_mse_db2.append(val_mse)
        if best_state is None or val_mse < min(report.val_mse_db2[:-1], default=np.inf):
            best_state = {k: v.copy() for k, v in model.state_dict().items()}

    report.best_epoch = best_epoch_index(report.val_mse_db2)
    model.load_state_dict(best_state)
    report.wall_clock_sec = time.perf_counter() - t0

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        model.save(out_dir / "model.npz", {"train_config": config.to_dict()})
        (out_dir / "train_report.json").write_text(report.to_json())
    return model, report
