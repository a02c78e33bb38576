"""Minimal differentiable-operator engine.

Just the tensor ops the gain-map UNet needs, on plain numpy (B, C, H, W)
arrays, with hand-derived backward passes. There is no autograd tape:
the network wires its own backward walk, and every gradient here is
checked against central finite differences in the test suite.

Convolutions use cross-correlation semantics. Two algebraically
equivalent execution paths exist and are picked per call by a fixed
shape rule, so runs stay bit-reproducible:

* im2col: strided window view contracted with one BLAS matmul; the
  input gradient is a full correlation of the stride-dilated output
  gradient with the spatially flipped kernel;
* FFT: rfft2 of input and kernel, a per-frequency channel contraction,
  and an inverse transform. On wide feature maps this moves far fewer
  bytes than im2col, which matters on memory-bound hosts.

Both paths agree to ~1e-14 in float64 and are exercised separately by
the gradient and oracle tests.

Parameters are named `Param` objects carrying a value and a gradient
buffer; training runs in float32, gradient checks in float64.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "Param",
    "AdamState",
    "conv2d",
    "conv2d_backward",
    "relu",
    "relu_backward",
    "upsample_nearest2x",
    "upsample_nearest2x_backward",
    "concat_channels",
    "split_channels",
    "reduce_mean",
    "reduce_mean_backward",
    "reduce_max",
    "reduce_max_backward",
    "mse_loss",
    "adam_step",
    "save_params",
    "load_params",
]

CHECKPOINT_VERSION = 1


@dataclass
class Param:
    """A named learnable array with an accumulating gradient buffer."""

    name: str
    value: np.ndarray
    grad: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        if self.grad.shape != self.value.shape:
            raise ValueError(f"{self.name}: grad shape {self.grad.shape} != value shape {self.value.shape}")

    def zero_grad(self):
        self.grad.fill(0.0)

    @property
    def size(self) -> int:
        return int(self.value.size)


def _require4d(name: str, x: np.ndarray):
    if x.ndim != 4:
        raise ValueError(f"{name} must be 4-d (B, C, H, W), got shape {x.shape}")


def _windows(x_padded: np.ndarray, k: int, stride: int) -> np.ndarray:
    # (B, C, OH, OW, k, k) strided view over the padded input
    win = sliding_window_view(x_padded, (k, k), axis=(2, 3))
    return win[:, :, ::stride, ::stride]


# FFT pays off once a feature map has this many padded cells
_FFT_MIN_CELLS = 24 * 24


def _pick_method(method: str, padded_cells: int) -> str:
    if method == "auto":
        return "fft" if padded_cells >= _FFT_MIN_CELLS else "im2col"
    if method not in ("fft", "im2col"):
        raise ValueError(f"unknown conv method {method!r}")
    return method


def _rfft2(arr: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    # scipy keeps float32 inputs in single precision; numpy would promote
    return scipy.fft.rfft2(arr, s=shape)


def _irfft2(arr: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    return scipy.fft.irfft2(arr, s=shape)


def _freq_contract(a: np.ndarray, bmat: np.ndarray) -> np.ndarray:
    """Per-frequency channel contraction: (B,P,fh,fc) x (Q,P,fh,fc) -> (B,Q,fh,fc)."""
    fh, fc = a.shape[-2], a.shape[-1]
    am = a.reshape(*a.shape[:2], -1).transpose(2, 0, 1)        # (F, B, P)
    bm = bmat.reshape(*bmat.shape[:2], -1).transpose(2, 1, 0)  # (F, P, Q)
    out = np.matmul(am, bm)                                    # (F, B, Q)
    return out.transpose(1, 2, 0).reshape(a.shape[0], bmat.shape[0], fh, fc)


def conv2d(
    x: np.ndarray,
    w: np.ndarray,
    b: np.ndarray,
    stride: int = 1,
    padding: int = 0,
    method: str = "auto",
) -> np.ndarray:
    """Cross-correlate x (B,Cin,H,W) with w (Cout,Cin,k,k) plus bias.

    Output spatial size is floor((H + 2p - k)/stride) + 1.
    """
    _require4d("input", x)
    _require4d("weights", w)
    cout, cin, kh, kw = w.shape
    if kh != kw or kh % 2 == 0:
        raise ValueError(f"kernel must be square with odd size, got {kh}x{kw}")
    if x.shape[1] != cin:
        raise ValueError(f"input has {x.shape[1]} channels, weights expect {cin}")
    if b.shape != (cout,):
        raise ValueError(f"bias shape {b.shape} != ({cout},)")
    if stride < 1 or padding < 0:
        raise ValueError("stride must be >= 1 and padding >= 0")
    hp, wp = x.shape[2] + 2 * padding, x.shape[3] + 2 * padding
    if hp < kh or wp < kh:
        raise ValueError("kernel larger than padded input")

    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    if _pick_method(method, hp * wp) == "fft":
        xf = _rfft2(x, (hp, wp))
        wf = np.conj(_rfft2(w, (hp, wp)))
        y = _irfft2(_freq_contract(xf, wf), (hp, wp))
        y = y[:, :, : hp - kh + 1 : stride, : wp - kh + 1 : stride]
        y = np.ascontiguousarray(y, dtype=x.dtype)
    else:
        win = _windows(x, kh, stride)
        y = np.tensordot(win, w, axes=([1, 4, 5], [1, 2, 3]))  # (B, OH, OW, Cout)
        y = np.ascontiguousarray(np.moveaxis(y, 3, 1))
    y += b.reshape(1, cout, 1, 1)
    return y


def conv2d_backward(
    x: np.ndarray,
    w: np.ndarray,
    dy: np.ndarray,
    stride: int = 1,
    padding: int = 0,
    method: str = "auto",
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (dx, dw, db) of conv2d for upstream gradient dy."""
    _require4d("input", x)
    _require4d("grad", dy)
    cout, cin, k, _ = w.shape
    bsz, _, h, wid = x.shape
    if dy.shape[1] != cout:
        raise ValueError(f"grad has {dy.shape[1]} channels, weights produce {cout}")
    hp, wp = h + 2 * padding, wid + 2 * padding
    oh_ok = (hp - k) // stride + 1
    ow_ok = (wp - k) // stride + 1
    if dy.shape[2:] != (oh_ok, ow_ok):
        raise ValueError(f"grad spatial shape {dy.shape[2:]} != output shape {(oh_ok, ow_ok)}")

    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x
    db = dy.sum(axis=(0, 2, 3))

    # stride-dilated dy: gradients live on the stride grid
    if stride > 1:
        dyd = np.zeros((bsz, cout, (oh_ok - 1) * stride + 1, (ow_ok - 1) * stride + 1), dtype=dy.dtype)
        dyd[:, :, ::stride, ::stride] = dy
    else:
        dyd = dy

    if _pick_method(method, hp * wp) == "fft":
        xf = _rfft2(xp, (hp, wp))
        dyf = _rfft2(dyd, (hp, wp))
        # dw[o,c,u,v] = sum_b corr(xp[b,c], dyd[b,o])[u,v] on the k x k window
        dwf = _freq_contract(np.conj(dyf).transpose(1, 0, 2, 3), xf.transpose(1, 0, 2, 3))
        dw_full = _irfft2(dwf, (hp, wp))
        dw = np.ascontiguousarray(dw_full[:, :, :k, :k], dtype=w.dtype)
        # dxp[b,c] = sum_o linear_conv(dyd[b,o], w[o,c]), circular size hp x wp
        wf = _rfft2(w, (hp, wp))
        dxf = _freq_contract(dyf, wf.transpose(1, 0, 2, 3))
        dxp = _irfft2(dxf, (hp, wp)).astype(dy.dtype, copy=False)
    else:
        win = _windows(xp, k, stride)
        dw = np.tensordot(dy, win, axes=([0, 2, 3], [0, 2, 3])).astype(w.dtype, copy=False)
        # dx: full correlation of the dilated dy with the flipped kernel
        w_flip = np.ascontiguousarray(w[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
        full = conv2d(dyd, w_flip, np.zeros(cin, dtype=dy.dtype), stride=1, padding=k - 1, method="im2col")
        if full.shape[2:] != (hp, wp):
            # strided outputs can leave trailing padded rows/cols with zero gradient
            dxp = np.zeros((bsz, cin, hp, wp), dtype=dy.dtype)
            dxp[:, :, : full.shape[2], : full.shape[3]] = full
        else:
            dxp = full
    dx = dxp[:, :, padding : padding + h, padding : padding + wid]
    return np.ascontiguousarray(dx), dw, db


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(x: np.ndarray, dy: np.ndarray) -> np.ndarray:
    if x.shape != dy.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {dy.shape}")
    return np.where(x > 0, dy, 0)


def upsample_nearest2x(x: np.ndarray) -> np.ndarray:
    """Each value replicated into a 2x2 block: (B,C,H,W) -> (B,C,2H,2W)."""
    _require4d("input", x)
    return x.repeat(2, axis=2).repeat(2, axis=3)


def upsample_nearest2x_backward(dy: np.ndarray) -> np.ndarray:
    _require4d("grad", dy)
    b, c, h2, w2 = dy.shape
    if h2 % 2 or w2 % 2:
        raise ValueError(f"upsampled gradient must have even spatial size, got {dy.shape}")
    return dy.reshape(b, c, h2 // 2, 2, w2 // 2, 2).sum(axis=(3, 5))


def concat_channels(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _require4d("first input", a)
    _require4d("second input", b)
    if a.shape[0] != b.shape[0] or a.shape[2:] != b.shape[2:]:
        raise ValueError(f"cannot concat {a.shape} with {b.shape}")
    return np.concatenate([a, b], axis=1)


def split_channels(dy: np.ndarray, first_channels: int) -> tuple[np.ndarray, np.ndarray]:
    """Backward of concat_channels: route the gradient back to both inputs."""
    if not (0 < first_channels < dy.shape[1]):
        raise ValueError(f"split point {first_channels} outside (0, {dy.shape[1]})")
    return dy[:, :first_channels], dy[:, first_channels:]


def reduce_mean(x: np.ndarray) -> float:
    return float(x.mean())


def reduce_mean_backward(x: np.ndarray, dloss: float = 1.0) -> np.ndarray:
    return np.full_like(x, dloss / x.size)


def reduce_max(x: np.ndarray) -> float:
    return float(x.max())


def reduce_max_backward(x: np.ndarray, dloss: float = 1.0) -> np.ndarray:
    # gradient routes to the first maximal element, matching argmax
    out = np.zeros_like(x)
    out.flat[int(np.argmax(x))] = dloss
    return out


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error over all elements; returns (loss, dloss/dpred)."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    return loss, (2.0 / diff.size) * diff


@dataclass
class AdamState:
    """Adam moment buffers plus hyperparameters, keyed by parameter name."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: list[Param], state: AdamState) -> AdamState:
    """One bias-corrected Adam update, applied in place to param values."""
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    for p in params:
        g = p.grad
        if not np.isfinite(g).all():
            raise FloatingPointError(f"non-finite gradient for parameter {p.name!r}")
        if p.name not in state.m:
            state.m[p.name] = np.zeros_like(p.value)
            state.v[p.name] = np.zeros_like(p.value)
        m = state.m[p.name]
        v = state.v[p.name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        m_hat = m / c1
        v_hat = v / c2
        p.value -= (state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(p.value.dtype)
    return state


def save_params(path, params: list[Param], meta: dict | None = None) -> None:
    """Checkpoint: one .npz entry per named parameter plus a JSON meta blob.

    The npz container keeps each array's shape/dtype header; `__meta__`
    carries the checkpoint format version and a training-config echo.
    """
    doc = dict(meta or {})
    doc["format_version"] = CHECKPOINT_VERSION
    arrays = {p.name: p.value for p in params}
    if "__meta__" in arrays:
        raise ValueError("'__meta__' is a reserved checkpoint key")
    np.savez(path, __meta__=np.frombuffer(json.dumps(doc, sort_keys=True).encode(), dtype=np.uint8), **arrays)


def load_params(path) -> tuple[dict[str, np.ndarray], dict]:
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode())
        if meta.get("format_version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('format_version')!r}")
        arrays = {k: data[k] for k in data.files if k != "__meta__"}
    return arrays, meta
