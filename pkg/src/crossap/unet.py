"""Encoder-decoder network for cross-AP gain map inference.

A symmetric UNet built from the engine primitives:

  (i)   1x1 reduction conv squeezing the (N+1)-channel stack to the
        base width (cheap dimensionality reduction for wide inputs);
  (ii)  per encoder level, a 5x5 conv + relu, then a stride-2 5x5
        conv + relu that halves resolution and doubles width;
  (iii) one extra 5x5 conv block at the configured levels (by default
        the two coarsest levels above the bottleneck);
  (iv)  per decoder level, x2 nearest upsample, concat with the
        same-resolution encoder features, 5x5 conv + relu halving width;
  (v)   1x1 head conv to a single channel, linear output.

The output head is unclamped; clamping to [0, 1] happens only at
evaluation and serving so the loss keeps its gradient near saturation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import engine
from .engine import Param

__all__ = ["UNetConfig", "UNet", "build", "default_extra_levels"]

KERNEL = 5


def default_extra_levels(depth: int) -> tuple[int, ...]:
    """The two coarsest encoder levels above the bottleneck."""
    n_levels = depth - 1
    return tuple(range(max(0, n_levels - 2), n_levels))


@dataclass(frozen=True)
class UNetConfig:
    in_channels: int
    base_width: int = 32
    depth: int = 4
    extra_conv_levels: tuple[int, ...] = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.in_channels < 2:
            raise ValueError(f"in_channels must be >= 2, got {self.in_channels}")
        if self.base_width < 1 or self.depth < 1:
            raise ValueError("base_width and depth must be >= 1")
        extras = self.extra_conv_levels
        if extras is None:
            extras = default_extra_levels(self.depth)
        extras = tuple(sorted(set(int(i) for i in extras)))
        if any(i < 0 or i >= self.depth - 1 for i in extras):
            raise ValueError(f"extra conv levels {extras} outside [0, {self.depth - 1})")
        object.__setattr__(self, "extra_conv_levels", extras)

    def width_at(self, level: int) -> int:
        return self.base_width * (2**level)

    def to_dict(self) -> dict:
        return {
            "in_channels": self.in_channels,
            "base_width": self.base_width,
            "depth": self.depth,
            "extra_conv_levels": list(self.extra_conv_levels),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "UNetConfig":
        return cls(
            in_channels=int(doc["in_channels"]),
            base_width=int(doc["base_width"]),
            depth=int(doc["depth"]),
            extra_conv_levels=tuple(doc["extra_conv_levels"]),
        )


class _Conv:
    """Conv layer owning its params and caching its input for backward."""

    def __init__(self, name, cin, cout, k, stride, padding, rng, dtype):
        bound = np.sqrt(6.0 / (cin * k * k))  # Kaiming-style uniform, fan-in scaled
        w = rng.uniform(-bound, bound, size=(cout, cin, k, k)).astype(dtype)
        self.w = Param(f"{name}.w", w)
        self.b = Param(f"{name}.b", np.zeros(cout, dtype=dtype))
        self.stride = stride
        self.padding = padding
        self._x = None

    def forward(self, x, cache):
        if cache:
            self._x = x
        return engine.conv2d(x, self.w.value, self.b.value, self.stride, self.padding)

    def backward(self, dy):
        dx, dw, db = engine.conv2d_backward(self._x, self.w.value, dy, self.stride, self.padding)
        self.w.grad += dw
        self.b.grad += db
        self._x = None
        return dx


class UNet:
    """The fixed-graph network; backward is wired by hand in reverse."""

    def __init__(self, config: UNetConfig, seed: int = 0, dtype=np.float32):
        self.config = config
        self.dtype = np.dtype(dtype)
        self._cache = None
        rng = np.random.default_rng(seed)
        d = config.depth

        def conv(name, cin, cout, k=KERNEL, stride=1):
            return _Conv(name, cin, cout, k, stride, k // 2, rng, self.dtype)

        self.reduce = conv("reduce", config.in_channels, config.base_width, k=1)
        self.enc, self.extra, self.down = [], {}, []
        for i in range(d - 1):
            ch = config.width_at(i)
            self.enc.append(conv(f"enc{i}", ch, ch))
            if i in config.extra_conv_levels:
                self.extra[i] = conv(f"enc{i}_extra", ch, ch)
            self.down.append(conv(f"down{i}", ch, config.width_at(i + 1), stride=2))
        bott = config.width_at(d - 1)
        self.bottleneck = conv("bottleneck", bott, bott)
        self.dec = []
        for i in reversed(range(d - 1)):
            cin = config.width_at(i + 1) + config.width_at(i)
            self.dec.append(conv(f"dec{i}", cin, config.width_at(i)))
        self.dec.reverse()  # dec[i] consumes level-i skip features
        self.head = conv("head", config.base_width, 1, k=1)
        # small-scale output head: keeps the initial prediction near zero so
        # Adam's aggressive first steps cannot overshoot the loss
        self.head.w.value *= 0.125

    # -- parameter plumbing -------------------------------------------------

    @property
    def layers(self):
        out = [self.reduce] + self.enc + list(self.extra.values()) + self.down
        out += [self.bottleneck] + self.dec + [self.head]
        return out

    @property
    def params(self) -> list[Param]:
        seen = []
        for layer in self.layers:
            seen.extend([layer.w, layer.b])
        return seen

    def count_params(self) -> int:
        return sum(p.size for p in self.params)

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {p.name: p.value for p in self.params}

    def load_state_dict(self, arrays: dict[str, np.ndarray]):
        own = {p.name: p for p in self.params}
        missing = set(own) - set(arrays)
        if missing:
            raise ValueError(f"checkpoint is missing parameters: {sorted(missing)}")
        for name, p in own.items():
            arr = np.asarray(arrays[name], dtype=self.dtype)
            if arr.shape != p.value.shape:
                raise ValueError(f"{name}: checkpoint shape {arr.shape} != model shape {p.value.shape}")
            p.value = arr.copy()

    # -- execution -----------------------------------------------------------

    def _check_input(self, x):
        if x.ndim != 4:
            raise ValueError(f"input must be (B, C, H, W), got shape {x.shape}")
        if x.shape[1] != self.config.in_channels:
            raise ValueError(
                f"input has {x.shape[1]} channels, model expects {self.config.in_channels}"
            )
        if x.shape[2] != x.shape[3]:
            raise ValueError(f"input must be square, got {x.shape}")
        down_factor = 2 ** (self.config.depth - 1)
        if x.shape[2] % down_factor:
            raise ValueError(f"input size {x.shape[2]} not divisible by {down_factor}")

    def forward(self, x: np.ndarray, cache: bool = False) -> np.ndarray:
        """(B, C, W, W) stack batch -> (B, 1, W, W) unclamped prediction."""
        x = np.ascontiguousarray(x, dtype=self.dtype)
        self._check_input(x)
        c = self._cache = {} if cache else None
        d = self.config.depth

        h = self.reduce.forward(x, cache)
        skips = []
        for i in range(d - 1):
            pre = self.enc[i].forward(h, cache)
            if cache:
                c[f"enc{i}"] = pre
            h = engine.relu(pre)
            if i in self.extra:
                pre = self.extra[i].forward(h, cache)
                if cache:
                    c[f"extra{i}"] = pre
                h = engine.relu(pre)
            skips.append(h)
            pre = self.down[i].forward(h, cache)
            if cache:
                c[f"down{i}"] = pre
            h = engine.relu(pre)
        pre = self.bottleneck.forward(h, cache)
        if cache:
            c["bottleneck"] = pre
        h = engine.relu(pre)
        for i in reversed(range(d - 1)):
            up = engine.upsample_nearest2x(h)
            cat = engine.concat_channels(up, skips[i])
            pre = self.dec[i].forward(cat, cache)
            if cache:
                c[f"dec{i}"] = pre
            h = engine.relu(pre)
        return self.head.forward(h, cache)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        """Accumulate parameter gradients for the last cached forward."""
        if self._cache is None:
            raise RuntimeError("backward requires a forward(..., cache=True) first")
        c = self._cache
        d = self.config.depth

        dh = self.head.backward(dy)
        dskips = {}
        for i in range(d - 1):
            dh = engine.relu_backward(c[f"dec{i}"], dh)
            dcat = self.dec[i].backward(dh)
            dup, dskips[i] = engine.split_channels(dcat, self.config.width_at(i + 1))
            dh = engine.upsample_nearest2x_backward(dup)
        dh = engine.relu_backward(c["bottleneck"], dh)
        dh = self.bottleneck.backward(dh)
        for i in reversed(range(d - 1)):
            dh = engine.relu_backward(c[f"down{i}"], dh)
            dh = self.down[i].backward(dh)
            dh = dh + dskips[i]
            if i in self.extra:
                dh = engine.relu_backward(c[f"extra{i}"], dh)
                dh = self.extra[i].backward(dh)
            dh = engine.relu_backward(c[f"enc{i}"], dh)
            dh = self.enc[i].backward(dh)
        dx = self.reduce.backward(dh)
        self._cache = None
        return dx

    def predict_maps(self, stacks: np.ndarray) -> np.ndarray:
        """(B, C, W, W) -> (B, W, W) predictions clamped to [0, 1]."""
        y = self.forward(stacks, cache=False)
        return np.clip(y[:, 0], 0.0, 1.0).astype(np.float64)

    # -- persistence ---------------------------------------------------------

    def save(self, path, extra_meta: dict | None = None):
        meta = dict(extra_meta or {})
        meta["model_config"] = self.config.to_dict()
        engine.save_params(path, self.params, meta)

    @classmethod
    def load(cls, path) -> tuple["UNet", dict]:
        arrays, meta = engine.load_params(path)
        model = cls(UNetConfig.from_dict(meta["model_config"]), seed=0)
        model.load_state_dict(arrays)
        return model, meta


def build(config: UNetConfig, seed: int = 0) -> UNet:
    """Fresh model with seeded Kaiming-uniform weights and zero biases."""
    return UNet(config, seed=seed)
