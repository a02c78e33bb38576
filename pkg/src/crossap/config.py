"""Merged run configuration: defaults <- config file <- flag overrides.

Config files are either JSON (nested sections) or flat ``key=value``
lines with dotted section paths (``train.epochs=10``). Unknown keys are
rejected rather than ignored, and the effective configuration is echoed
into every output a run produces.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["RunConfig", "ConfigError", "load_run_config", "parse_override"]


class ConfigError(ValueError):
    """Bad configuration input; the CLI maps this to exit code 2."""


@dataclass
class GridSection:
    width_cells: int = 64
    cell_size_m: float = 1.0
    # ceiling (floor + span) sits just above the simulator's peak gain so
    # synthetic maps use the full normalized range without top saturation
    gain_floor_db: float = -113.0
    gain_span_db: float = 100.0


@dataclass
class PropagationSection:
    freq_ghz: float = 3.5
    tx_power_dbm: float = 30.0
    wall_loss_db: float = 15.0
    los_exponent: float = 2.0


@dataclass
class GenerationSection:
    maps: int = 12
    aps: int = 8
    buildings_min: int = 4
    buildings_max: int = 10
    val_fraction: float = 0.2


@dataclass
class AssemblySection:
    omega: float = 0.5


@dataclass
class TrainSection:
    epochs: int = 15
    batch_size: int = 15
    lr: float = 1e-3
    base_width: int = 32
    depth: int = 4


@dataclass
class BaselineSection:
    beta: float = 0.1
    ap_height_m: float = 10.0
    ut_height_m: float = 1.5


@dataclass
class ServiceSection:
    host: str = "127.0.0.1"
    port: int = 8000
    coverage_threshold_db: float = -90.0


@dataclass
class RunConfig:
    seed: int = 0
    grid: GridSection = field(default_factory=GridSection)
    propagation: PropagationSection = field(default_factory=PropagationSection)
    generation: GenerationSection = field(default_factory=GenerationSection)
    assembly: AssemblySection = field(default_factory=AssemblySection)
    train: TrainSection = field(default_factory=TrainSection)
    baselines: BaselineSection = field(default_factory=BaselineSection)
    service: ServiceSection = field(default_factory=ServiceSection)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _coerce(current, raw, path: str):
    """Coerce a raw value onto the type of the default it replaces."""
    target = type(current)
    try:
        if isinstance(raw, str) and target is not str:
            raw = json.loads(raw)
        if target is bool:
            if not isinstance(raw, bool):
                raise ValueError("expected a boolean")
            return raw
        if target is int:
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError("expected an integer")
            return int(raw)
        if target is float:
            return float(raw)
        if target is str:
            return str(raw)
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"bad value for {path!r}: {raw!r} ({exc})") from exc
    raise ConfigError(f"unsupported config value type for {path!r}")


def _apply(cfg: RunConfig, dotted: str, value):
    parts = dotted.split(".")
    node = cfg
    for part in parts[:-1]:
        if not dataclasses.is_dataclass(node) or part not in {f.name for f in dataclasses.fields(node)}:
            raise ConfigError(f"unknown config key {dotted!r}")
        node = getattr(node, part)
    leaf = parts[-1]
    if not dataclasses.is_dataclass(node) or leaf not in {f.name for f in dataclasses.fields(node)}:
        raise ConfigError(f"unknown config key {dotted!r}")
    current = getattr(node, leaf)
    if dataclasses.is_dataclass(current):
        raise ConfigError(f"{dotted!r} is a section, not a value")
    setattr(node, leaf, _coerce(current, value, dotted))


def _flatten(doc: dict, prefix: str = "") -> list[tuple[str, object]]:
    out = []
    for key, value in doc.items():
        path = f"{prefix}{key}"
        if isinstance(value, dict):
            out.extend(_flatten(value, prefix=f"{path}."))
        else:
            out.append((path, value))
    return out


def parse_override(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise ConfigError(f"override must look like section.key=value, got {text!r}")
    key, _, value = text.partition("=")
    return key.strip(), value.strip()


def load_run_config(
    path: str | Path | None = None,
    overrides: list[str] | None = None,
) -> RunConfig:
    """Defaults, then the config file, then ``key=value`` overrides."""
    cfg = RunConfig()
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_text()
        stripped = text.lstrip()
        if stripped.startswith("{"):
            try:
                doc = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
            if not isinstance(doc, dict):
                raise ConfigError(f"config root must be an object: {path}")
            for dotted, value in _flatten(doc):
                _apply(cfg, dotted, value)
        else:
            for lineno, line in enumerate(text.splitlines(), start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, value = parse_override(line)
                _apply(cfg, key, value)
    for item in overrides or []:
        key, value = parse_override(item) if isinstance(item, str) else item
        _apply(cfg, key, value)
    return cfg
