"""Dense tensor core.

A tensor is a rank-4 ``numpy.ndarray`` of 32-bit floats laid out as
(batch, height, width, channel), row-major. Every operation here is a pure
function: inputs are never mutated, and outputs are freshly allocated.
Reductions accumulate in 64-bit floats so small-tensor results agree with
scalar oracles to well under 1e-6.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

EPS = 1e-5

DFT1_MAGIC = b"DFT1"


class TensorFileError(ValueError):
    """Malformed or truncated binary tensor file."""


def tensor(data, shape=None) -> np.ndarray:
    """Build a rank-4 float32 tensor from nested data or a flat list + shape."""
    arr = np.asarray(data, dtype=np.float32)
    if shape is not None:
        arr = arr.reshape(shape)
    if arr.ndim != 4:
        raise ValueError(f"tensor must be rank 4 (b,h,w,c), got rank {arr.ndim}")
    check_tensor(arr)
    return arr


def check_tensor(x: np.ndarray) -> np.ndarray:
    """Validate the tensor contract: rank 4, extents >= 1, finite float32."""
    if not isinstance(x, np.ndarray) or x.ndim != 4:
        raise ValueError("expected a rank-4 (b,h,w,c) array")
    if min(x.shape) < 1:
        raise ValueError(f"all extents must be >= 1, got {x.shape}")
    if x.dtype != np.float32:
        raise ValueError(f"expected float32 data, got {x.dtype}")
    if not np.all(np.isfinite(x)):
        raise ValueError("tensor contains non-finite values")
    return x


def _pad_spatial(x: np.ndarray, top: int, bottom: int, left: int, right: int,
                 pad_mode: str) -> np.ndarray:
    if min(top, bottom, left, right) < 0:
        raise ValueError("negative padding")
    if top == bottom == left == right == 0:
        return x
    pads = ((0, 0), (top, bottom), (left, right), (0, 0))
    if pad_mode == "zero":
        return np.pad(x, pads, mode="constant")
    if pad_mode == "reflect":
        # edge-exclusive mirror; requires pad < extent on each padded axis
        h, w = x.shape[1], x.shape[2]
        if max(top, bottom) >= h or max(left, right) >= w:
            raise ValueError(
                f"reflect padding {(top, bottom, left, right)} too large for "
                f"extents {(h, w)}")
        return np.pad(x, pads, mode="reflect")
    raise ValueError(f"unknown pad_mode {pad_mode!r}")


def conv2d(x: np.ndarray, kernel: np.ndarray, bias=None, groups: int = 1,
           stride: int = 1, pad_mode: str = "zero") -> np.ndarray:
    """2-d cross-correlation with same-padding (stride 1) or halving (stride 2).

    ``kernel`` has shape (k, k, Cin/groups, Cout). groups=Cin gives depthwise
    behavior. Padding is k//2 per side in the chosen mode.
    """
    check_tensor(x)
    if kernel.ndim != 4 or kernel.shape[0] != kernel.shape[1]:
        raise ValueError(f"kernel must be (k,k,Cin/g,Cout), got {kernel.shape}")
    k, _, cin_g, cout = kernel.shape
    if k % 2 != 1:
        raise ValueError(f"kernel size must be odd, got {k}")
    if stride not in (1, 2):
        raise ValueError(f"stride must be 1 or 2, got {stride}")
    cin = x.shape[3]
    if cin != cin_g * groups:
        raise ValueError(
            f"input channels {cin} != kernel Cin/g {cin_g} * groups {groups}")
    if cout % groups != 0:
        raise ValueError(f"Cout {cout} not divisible by groups {groups}")
    kernel = np.asarray(kernel, dtype=np.float32)

    pad = k // 2
    xp = _pad_spatial(x, pad, pad, pad, pad, pad_mode)
    b, hp, wp, _ = xp.shape
    ho = (hp - k) // stride + 1
    wo = (wp - k) // stride + 1

    if groups == cin and cin_g == 1 and cout == cin:
        # depthwise, multiplier 1: accumulate shifted slices, one per tap
        acc = np.zeros((b, ho, wo, cout), dtype=np.float32)
        for i in range(k):
            for j in range(k):
                sl = xp[:, i:i + ho * stride:stride, j:j + wo * stride:stride, :]
                acc += sl * kernel[i, j, 0, :]
        out = acc
    elif groups == 1:
        out = _conv_im2col(xp, kernel, stride, ho, wo)
    else:
        cout_g = cout // groups
        out = np.empty((b, ho, wo, cout), dtype=np.float32)
        for g in range(groups):
            xg = xp[:, :, :, g * cin_g:(g + 1) * cin_g]
            kg = kernel[:, :, :, g * cout_g:(g + 1) * cout_g]
            out[:, :, :, g * cout_g:(g + 1) * cout_g] = _conv_im2col(
                xg, kg, stride, ho, wo)

    if bias is not None:
        bias = np.asarray(bias, dtype=np.float32)
        if bias.shape != (cout,):
            raise ValueError(f"bias shape {bias.shape} != ({cout},)")
        out = out + bias
    return check_tensor(np.ascontiguousarray(out, dtype=np.float32))


def _conv_im2col(xp: np.ndarray, kernel: np.ndarray, stride: int,
                 ho: int, wo: int) -> np.ndarray:
    k = kernel.shape[0]
    win = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(1, 2))
    win = win[:, ::stride, ::stride]  # (b, ho, wo, cin, k, k)
    return np.tensordot(win, kernel, axes=([3, 4, 5], [2, 0, 1]))


def linear(x: np.ndarray, w: np.ndarray, bias=None) -> np.ndarray:
    """Per-token channel projection: (b,h,w,Cin) @ (Cin,Cout) [+ bias]."""
    check_tensor(x)
    w = np.asarray(w, dtype=np.float32)
    if w.ndim != 2 or w.shape[0] != x.shape[3]:
        raise ValueError(
            f"weight shape {w.shape} incompatible with channel extent {x.shape[3]}")
    out = x @ w
    if bias is not None:
        bias = np.asarray(bias, dtype=np.float32)
        if bias.shape != (w.shape[1],):
            raise ValueError(f"bias shape {bias.shape} != ({w.shape[1]},)")
        out = out + bias
    return check_tensor(np.ascontiguousarray(out, dtype=np.float32))


def softmax_lastdim(x: np.ndarray) -> np.ndarray:
    """Numerically stable softmax along the last axis of any array."""
    x = np.asarray(x)
    if not np.all(np.isfinite(x)):
        raise ValueError("softmax input must be finite")
    shifted = x - np.max(x, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return (e / np.sum(e, axis=-1, keepdims=True)).astype(x.dtype, copy=False)


@dataclass(frozen=True)
class AxisStats:
    """Per-group mean and floored standard deviation from :func:`reduce_stats`."""
    mean: np.ndarray
    std: np.ndarray


def reduce_stats(x: np.ndarray, axes: str = "channel", eps: float = EPS) -> AxisStats:
    """Population mean/std over ``channel`` (c) or ``sample`` (h,w,c) groups.

    std = sqrt(var + eps), so it never vanishes. Accumulation is float64;
    outputs keep rank 4 for direct broadcasting against the input.
    """
    check_tensor(x)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if axes == "channel":
        red = (3,)
    elif axes == "sample":
        red = (1, 2, 3)
    else:
        raise ValueError(f"axes must be 'channel' or 'sample', got {axes!r}")
    x64 = x.astype(np.float64)
    mean = x64.mean(axis=red, keepdims=True)
    var = np.square(x64 - mean).mean(axis=red, keepdims=True)
    return AxisStats(mean=mean, std=np.sqrt(var + eps))


def save_dft1(path, x: np.ndarray) -> None:
    """Write a tensor: magic 'DFT1', 4 little-endian u64 extents, then <f4 payload."""
    check_tensor(x)
    with open(path, "wb") as f:
        f.write(DFT1_MAGIC)
        f.write(struct.pack("<4Q", *x.shape))
        f.write(np.ascontiguousarray(x, dtype="<f4").tobytes())


def load_dft1(path) -> np.ndarray:
    """Read a tensor written by :func:`save_dft1`, validating length and shape."""
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != DFT1_MAGIC:
        raise TensorFileError(f"{path}: bad magic {raw[:4]!r}")
    if len(raw) < 4 + 32:
        raise TensorFileError(f"{path}: truncated header")
    shape = struct.unpack("<4Q", raw[4:36])
    n = int(np.prod(shape))
    if min(shape) < 1 or n > 2 ** 32:
        raise TensorFileError(f"{path}: implausible extents {shape}")
    payload = raw[36:]
    if len(payload) != 4 * n:
        raise TensorFileError(
            f"{path}: payload is {len(payload)} bytes, expected {4 * n}")
    arr = np.frombuffer(payload, dtype="<f4").reshape(shape)
    return check_tensor(arr.astype(np.float32))
