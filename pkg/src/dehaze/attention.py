"""Windowed multi-head self-attention and its partitioning schemes.

A feature map is cut into w x w token windows; attention runs independently
inside each window. For the shifted pass there are four ways to make the
window grid line up:

* ``REFLECTION_PAD`` -- mirror-pad top/left by the shift and bottom/right up
  to a multiple of w, attend unmasked, crop back. Every window holds w*w real
  tokens; no mask is ever needed. Works for any extents.
* ``CYCLIC_SHIFT_MASKED`` -- roll the map by -shift and block attention
  between tokens that ended up adjacent only through wrap-around.
* ``CYCLIC_SHIFT_UNMASKED`` -- roll without masking (wrapped pairs interact).
* ``ZERO_PAD_MASKED`` -- zero-pad like the reflection scheme but mask the
  padded tokens out of attention.

Masks are additive logits: 0 where a pair may interact, -1e9 where not
(a finite stand-in for -inf that cannot produce NaNs).

The aggregation operator runs a convolution over the value map *before*
window partitioning, in parallel with attention, and projects the sum; with
attention disabled only the projected conv branch remains.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .activations import Activation
from .tensor import check_tensor, conv2d, linear, softmax_lastdim

MASK_NEG = -1e9


class Scheme(enum.Enum):
    REFLECTION_PAD = "reflection_pad"
    CYCLIC_SHIFT_MASKED = "cyclic_shift_masked"
    CYCLIC_SHIFT_UNMASKED = "cyclic_shift_unmasked"
    ZERO_PAD_MASKED = "zero_pad_masked"


PADDED_SCHEMES = (Scheme.REFLECTION_PAD, Scheme.ZERO_PAD_MASKED)


@dataclass
class WindowLayout:
    """Window geometry for one attention pass.

    ``pad_record`` is (top, bottom, left, right), filled in by
    :func:`partition` and consumed by :func:`reverse` for exact cropping.
    """
    window_size: int
    shift: int = 0
    scheme: Scheme = Scheme.REFLECTION_PAD
    pad_record: tuple[int, int, int, int] | None = field(default=None)

    def __post_init__(self):
        if self.window_size < 1:
            raise ValueError("window size must be >= 1")
        if not 0 <= self.shift < self.window_size:
            raise ValueError(
                f"shift {self.shift} outside [0, {self.window_size})")


def _pads_for(layout: WindowLayout, h: int, w: int) -> tuple[int, int, int, int]:
    ws, s = layout.window_size, layout.shift
    top = left = s
    bottom = (ws - (h + s) % ws) % ws
    right = (ws - (w + s) % ws) % ws
    return top, bottom, left, right


def _grid_windows(x: np.ndarray, ws: int) -> np.ndarray:
    b, h, w, c = x.shape
    nh, nw = h // ws, w // ws
    win = x.reshape(b, nh, ws, nw, ws, c).transpose(0, 1, 3, 2, 4, 5)
    return np.ascontiguousarray(win).reshape(b * nh * nw, ws * ws, c)


def _grid_reverse(windows: np.ndarray, ws: int, h: int, w: int) -> np.ndarray:
    nh, nw = h // ws, w // ws
    n, tokens, c = windows.shape
    b = n // (nh * nw)
    x = windows.reshape(b, nh, nw, ws, ws, c).transpose(0, 1, 3, 2, 4, 5)
    return np.ascontiguousarray(x).reshape(b, h, w, c)


def _pairwise_mask(labels: np.ndarray) -> np.ndarray:
    # labels: (num_windows, tokens); forbid pairs with differing labels
    diff = labels[:, :, None] != labels[:, None, :]
    return np.where(diff, np.float32(MASK_NEG), np.float32(0.0))


def _cyclic_labels(h: int, w: int, ws: int, s: int) -> np.ndarray:
    """Region labels in rolled coordinates; wrapped content gets its own label."""
    spans = ((0, h - ws), (h - ws, h - s), (h - s, h))
    row = np.zeros(h, np.int32)
    col = np.zeros(w, np.int32)
    for idx, (a, b) in enumerate(spans):
        row[a:b] = idx
    for idx, (a, b) in enumerate(((0, w - ws), (w - ws, w - s), (w - s, w))):
        col[a:b] = idx
    return (row[:, None] * 3 + col[None, :]).astype(np.float32)


def partition(x: np.ndarray, layout: WindowLayout):
    """Cut a map into (b*num_windows, w*w, c) windows per the layout's scheme.

    Returns ``(windows, mask)`` where ``mask`` is (num_windows, w*w, w*w)
    additive logits for the masked schemes and None otherwise. Updates
    ``layout.pad_record`` so :func:`reverse` can undo the operation exactly.
    """
    check_tensor(x)
    b, h, w, c = x.shape
    ws, s = layout.window_size, layout.shift

    if layout.scheme in PADDED_SCHEMES:
        top, bottom, left, right = _pads_for(layout, h, w)
        hp, wp = h + top + bottom, w + left + right
        if hp < ws or wp < ws:
            raise ValueError(
                f"window size {ws} exceeds padded extents {(hp, wp)}")
        layout.pad_record = (top, bottom, left, right)
        pads = ((0, 0), (top, bottom), (left, right), (0, 0))
        if layout.scheme is Scheme.REFLECTION_PAD:
            if max(top, bottom) >= h or max(left, right) >= w:
                raise ValueError(
                    f"reflect pads {(top, bottom, left, right)} too large for "
                    f"extents {(h, w)}")
            xp = np.pad(x, pads, mode="reflect")
            return _grid_windows(xp, ws), None
        xp = np.pad(x, pads, mode="constant")
        valid = np.zeros((1, hp, wp, 1), np.float32)
        valid[:, top:top + h, left:left + w, :] = 1.0
        valid_win = _grid_windows(valid, ws)[..., 0]  # (b==1 windows, tokens)
        # block attention *to* padded tokens; padded query rows get cropped away
        mask = np.where(valid_win[:, None, :] == 0.0,
                        np.float32(MASK_NEG), np.float32(0.0))
        return _grid_windows(xp, ws), mask

    # cyclic schemes need an exact window grid
    if h % ws != 0 or w % ws != 0:
        raise ValueError(
            f"cyclic schemes need extents divisible by {ws}, got {(h, w)}")
    if ws > h or ws > w:
        raise ValueError(f"window size {ws} exceeds extents {(h, w)}")
    layout.pad_record = (0, 0, 0, 0)
    rolled = np.roll(x, (-s, -s), axis=(1, 2)) if s else x
    windows = _grid_windows(rolled, ws)
    if layout.scheme is Scheme.CYCLIC_SHIFT_UNMASKED or s == 0:
        return windows, None
    labels = _cyclic_labels(h, w, ws, s)[None, :, :, None]
    label_win = _grid_windows(labels.astype(np.float32), ws)[..., 0]
    return windows, _pairwise_mask(label_win)


def reverse(windows: np.ndarray, layout: WindowLayout,
            extents: tuple[int, int]) -> np.ndarray:
    """Inverse of :func:`partition` back onto the original extents, bitwise."""
    h, w = extents
    if layout.pad_record is None:
        raise ValueError("layout has no pad_record; call partition first")
    top, bottom, left, right = layout.pad_record
    hp, wp = h + top + bottom, w + left + right
    if hp % layout.window_size or wp % layout.window_size:
        raise ValueError(
            f"pad_record {layout.pad_record} inconsistent with extents {extents}")
    nwin = (hp // layout.window_size) * (wp // layout.window_size)
    if windows.shape[0] % nwin != 0:
        raise ValueError(
            f"{windows.shape[0]} windows not a multiple of grid size {nwin}")
    x = _grid_reverse(windows, layout.window_size, hp, wp)
    if layout.scheme in PADDED_SCHEMES:
        return np.ascontiguousarray(x[:, top:top + h, left:left + w, :])
    if layout.shift:
        x = np.roll(x, (layout.shift, layout.shift), axis=(1, 2))
    return np.ascontiguousarray(x)


@dataclass
class RelPosBias:
    """Learned relative-position logits shared by every window.

    ``table`` holds one value per (relative offset, head); ``index`` gathers
    them into the (tokens x tokens) bias matrix.
    """
    table: np.ndarray  # ((2w-1)^2, heads)
    index: np.ndarray  # (w^2, w^2) int32

    @staticmethod
    def build_index(window_size: int) -> np.ndarray:
        coords = np.stack(np.meshgrid(np.arange(window_size),
                                      np.arange(window_size),
                                      indexing="ij"))  # (2, w, w)
        flat = coords.reshape(2, -1)
        rel = flat[:, :, None] - flat[:, None, :]  # (2, w^2, w^2)
        rel = rel + (window_size - 1)
        return (rel[0] * (2 * window_size - 1) + rel[1]).astype(np.int32)

    @classmethod
    def seeded(cls, window_size: int, heads: int,
               rng: np.random.Generator, std: float = 0.02) -> "RelPosBias":
        from .network import trunc_normal  # shared initializer
        n = (2 * window_size - 1) ** 2
        return cls(trunc_normal(rng, (n, heads), std),
                   cls.build_index(window_size))

    @classmethod
    def zeros(cls, window_size: int, heads: int) -> "RelPosBias":
        n = (2 * window_size - 1) ** 2
        return cls(np.zeros((n, heads), np.float32), cls.build_index(window_size))

    def matrix(self) -> np.ndarray:
        """Bias as (heads, w^2, w^2), ready to add to attention logits."""
        gathered = self.table[self.index]  # (w^2, w^2, heads)
        return np.ascontiguousarray(gathered.transpose(2, 0, 1))


@dataclass
class ConvBranch:
    """Convolution applied to the un-partitioned value map (reflect padded)."""
    kind: str  # "dwconv" (depthwise k=5) or "convblock" (k=3 conv-act-conv)
    k1: np.ndarray
    b1: np.ndarray
    k2: np.ndarray | None = None
    b2: np.ndarray | None = None
    act: Activation | None = None

    def apply(self, v: np.ndarray) -> np.ndarray:
        if self.kind == "dwconv":
            return conv2d(v, self.k1, self.b1, groups=v.shape[3],
                          pad_mode="reflect")
        if self.kind == "convblock":
            mid = self.act.apply(conv2d(v, self.k1, self.b1, pad_mode="reflect"))
            return conv2d(mid, self.k2, self.b2, pad_mode="reflect")
        raise ValueError(f"unknown conv branch kind {self.kind!r}")


@dataclass
class AttentionParams:
    """Projection weights for one aggregation operator.

    ``qk_w``/``qk_b`` are absent in blocks that never attend; the value
    projection and output projection always exist since the conv branch
    runs inside the same projection sandwich.
    """
    v_w: np.ndarray            # (c, c)
    v_b: np.ndarray            # (c,)
    proj_w: np.ndarray         # (c, c)
    proj_b: np.ndarray         # (c,)
    heads: int = 1
    qk_w: np.ndarray | None = None  # (c, 2c)
    qk_b: np.ndarray | None = None
    conv: ConvBranch | None = None

    @property
    def dim(self) -> int:
        return self.v_w.shape[0]

    @property
    def head_dim(self) -> int:
        return self.dim // self.heads

    @property
    def qkv_w(self) -> np.ndarray:
        """Full (c, 3c) projection in (q, k, v) column order."""
        if self.qk_w is None:
            raise ValueError("attention projections absent in this block")
        return np.concatenate([self.qk_w, self.v_w], axis=1)

    @property
    def qkv_b(self) -> np.ndarray:
        if self.qk_b is None:
            raise ValueError("attention projections absent in this block")
        return np.concatenate([self.qk_b, self.v_b])

    def validate(self) -> None:
        c = self.dim
        if c % self.heads != 0:
            raise ValueError(f"heads {self.heads} must divide channels {c}")
        if self.v_w.shape != (c, c) or self.proj_w.shape != (c, c):
            raise ValueError("projection weight shapes inconsistent")
        if self.qk_w is not None and self.qk_w.shape != (c, 2 * c):
            raise ValueError(f"qk weights shaped {self.qk_w.shape}, need (c, 2c)")


def _split_heads(x: np.ndarray, heads: int) -> np.ndarray:
    n, tokens, c = x.shape
    d = c // heads
    return x.reshape(n, tokens, heads, d).transpose(0, 2, 1, 3)


def _attention_core(qkv: np.ndarray, heads: int, bias_matrix: np.ndarray | None,
                    mask: np.ndarray | None) -> np.ndarray:
    """Scaled dot-product over windows already projected to (q, k, v).

    qkv: (n, tokens, 3c) -> (n, tokens, c).
    """
    n, tokens, c3 = qkv.shape
    c = c3 // 3
    q = _split_heads(qkv[:, :, :c], heads)
    k = _split_heads(qkv[:, :, c:2 * c], heads)
    v = _split_heads(qkv[:, :, 2 * c:], heads)
    d = c // heads
    logits = (q * np.float32(1.0 / math.sqrt(d))) @ k.transpose(0, 1, 3, 2)
    if bias_matrix is not None:
        logits = logits + bias_matrix[None]
    if mask is not None:
        reps = n // mask.shape[0]
        logits = logits + np.tile(mask, (reps, 1, 1))[:, None, :, :]
    weights = softmax_lastdim(logits)
    out = weights @ v  # (n, heads, tokens, d)
    return np.ascontiguousarray(out.transpose(0, 2, 1, 3)).reshape(n, tokens, c)


def wmhsa(windows: np.ndarray, params: AttentionParams, bias: RelPosBias,
          mask: np.ndarray | None = None) -> np.ndarray:
    """Full windowed attention on (n, w*w, c) windows, projections included."""
    params.validate()
    n, tokens, c = windows.shape
    if bias.index.shape[0] != tokens:
        raise ValueError(
            f"bias built for {bias.index.shape[0]} tokens, windows carry {tokens}")
    qkv = windows @ params.qkv_w + params.qkv_b
    out = _attention_core(qkv.astype(np.float32), params.heads,
                          bias.matrix(), mask)
    return (out @ params.proj_w + params.proj_b).astype(np.float32)


def aggregate(x: np.ndarray, params: AttentionParams, layout: WindowLayout,
              use_attention: bool = True,
              bias: RelPosBias | None = None) -> np.ndarray:
    """Attention plus parallel convolution on the pre-partition value map.

    The value map is computed once on the full grid; the conv branch sees it
    un-partitioned (so it aggregates across window borders), the attention
    branch sees it cut into windows. Their sum goes through the shared output
    projection. With ``use_attention`` off, the projected conv branch alone
    remains.
    """
    check_tensor(x)
    params.validate()
    b, h, w, c = x.shape
    v_map = linear(x, params.v_w, params.v_b)
    conv_out = params.conv.apply(v_map) if params.conv is not None else None

    if not use_attention:
        if conv_out is None:
            raise ValueError("block with neither attention nor conv branch")
        return linear(conv_out, params.proj_w, params.proj_b)

    if bias is None:
        bias = RelPosBias.zeros(layout.window_size, params.heads)
    qk_map = linear(x, params.qk_w, params.qk_b)
    qkv_map = np.concatenate([qk_map, v_map], axis=3)
    windows, mask = partition(qkv_map, layout)
    attn_windows = _attention_core(windows, params.heads, bias.matrix(), mask)
    attn_out = reverse(attn_windows, layout, (h, w))
    merged = attn_out if conv_out is None else attn_out + conv_out
    return linear(merged.astype(np.float32), params.proj_w, params.proj_b)
