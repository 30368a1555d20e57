"""Five-stage U-shaped dehazing network.

Stages run at full, half, quarter, half, full resolution. Each stage stacks
transformer-style blocks whose spatial mixing is windowed attention in
parallel with a convolution on the value map; blocks without attention keep
only the convolution inside the same projection sandwich and skip
normalization entirely. Skip connections are fused with channel attention,
and the output head predicts a (K, B) pair combined as K*I + B + I so a
zeroed head passes the input through untouched.

Weights live in a :class:`WeightStore`: an ordered name -> float32 array map
with deterministic seeded initialization and bit-exact file round-trips
(``<stem>.manifest`` text lines plus ``<stem>.bin`` little-endian payload).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .activations import Activation, relu
from .attention import (AttentionParams, ConvBranch, RelPosBias, Scheme,
                        WindowLayout, aggregate)
from .normalization import (NormParams, RescaleWeights, rescalenorm_begin,
                            rescalenorm_end)
from .tensor import check_tensor, conv2d, linear

STAGES = 5

DWCONV = "dwconv"        # depthwise k=5 parallel conv
CONVBLOCK = "convblock"  # conv3-act-conv3 parallel conv


class WeightStoreError(Exception):
    """Base class for weight serialization failures."""


class WeightShapeError(WeightStoreError):
    """A stored parameter's shape disagrees with the architecture."""


class WeightTruncationError(WeightStoreError):
    """The binary payload is shorter than the manifest promises."""


class UnknownWeightError(WeightStoreError):
    """The manifest names a parameter the architecture does not declare."""


@dataclass(frozen=True)
class VariantSpec:
    """One architecture configuration: per-stage widths, depths and ratios."""
    name: str
    blocks: tuple[int, ...]
    dims: tuple[int, ...]
    mlp_ratios: tuple[int, ...]
    attn_ratios: tuple[float, ...]
    heads: tuple[int, ...]
    conv_type: str
    window_size: int = 8
    shift: int = 4
    sk_reduction: int = 8

    def validate(self) -> None:
        for name, seq in (("blocks", self.blocks), ("dims", self.dims),
                          ("mlp_ratios", self.mlp_ratios),
                          ("attn_ratios", self.attn_ratios),
                          ("heads", self.heads)):
            if len(seq) != STAGES:
                raise ValueError(f"{name} needs {STAGES} entries, got {len(seq)}")
        if self.conv_type not in (DWCONV, CONVBLOCK):
            raise ValueError(f"unknown conv type {self.conv_type!r}")
        for s in range(STAGES):
            if not 0.0 <= self.attn_ratios[s] <= 1.0:
                raise ValueError(f"attention ratio out of [0,1] at stage {s + 1}")
            if self.attn_ratios[s] > 0 and self.dims[s] % self.heads[s] != 0:
                raise ValueError(
                    f"stage {s + 1}: dim {self.dims[s]} not divisible by "
                    f"{self.heads[s]} heads")
        if self.dims[1] != self.dims[3] or self.dims[0] != self.dims[4]:
            raise ValueError("skip fusion needs dims[1]==dims[3], dims[0]==dims[4]")
        for s in (3, 4):
            if self.dims[s] % self.sk_reduction != 0:
                raise ValueError(
                    f"sk reduction {self.sk_reduction} must divide dim {self.dims[s]}")
        if not 0 <= self.shift < self.window_size:
            raise ValueError("shift must lie in [0, window_size)")

    def attn_blocks(self, stage: int) -> int:
        """Number of attention-bearing blocks; they sit at the stage's end."""
        return int(math.ceil(self.attn_ratios[stage] * self.blocks[stage] - 1e-9))

    def block_uses_attn(self, stage: int, block: int) -> bool:
        return block >= self.blocks[stage] - self.attn_blocks(stage)

    def block_shift(self, stage: int, block: int) -> int:
        return 0 if block % 2 == 0 else self.shift


VARIANTS = {
    "T": VariantSpec("T", (4, 4, 4, 2, 2), (24, 48, 96, 48, 24),
                     (2, 4, 4, 2, 2), (1 / 4, 1 / 2, 3 / 4, 0, 0),
                     (2, 4, 6, 1, 1), DWCONV),
    "S": VariantSpec("S", (8, 8, 8, 4, 4), (24, 48, 96, 48, 24),
                     (2, 4, 4, 2, 2), (1 / 4, 1 / 2, 3 / 4, 0, 0),
                     (2, 4, 6, 1, 1), DWCONV),
    "B": VariantSpec("B", (16, 16, 16, 8, 8), (24, 48, 96, 48, 24),
                     (2, 4, 4, 2, 2), (1 / 4, 1 / 2, 3 / 4, 0, 0),
                     (2, 4, 6, 1, 1), DWCONV),
    "M": VariantSpec("M", (12, 12, 12, 6, 6), (24, 48, 96, 48, 24),
                     (2, 4, 4, 2, 2), (1 / 4, 1 / 2, 3 / 4, 0, 0),
                     (2, 4, 6, 1, 1), CONVBLOCK),
    "L": VariantSpec("L", (16, 16, 16, 12, 12), (48, 96, 192, 96, 48),
                     (2, 4, 4, 2, 2), (1 / 4, 1 / 2, 3 / 4, 0, 0),
                     (2, 4, 6, 1, 1), CONVBLOCK),
}


def trunc_normal(rng: np.random.Generator, shape, std: float = 0.02) -> np.ndarray:
    """Normal(0, std) resampled until inside [-2*std, 2*std]."""
    out = rng.normal(0.0, std, size=shape)
    bad = np.abs(out) > 2 * std
    while bad.any():
        out[bad] = rng.normal(0.0, std, size=int(bad.sum()))
        bad = np.abs(out) > 2 * std
    return np.ascontiguousarray(out, dtype=np.float32)


# ---------------------------------------------------------------------------
# parameter enumeration: single source of truth for init, I/O and counting

_TN, _ZERO, _ONE = "tn", "zero", "one"


def _block_entries(spec: VariantSpec, s: int, i: int):
    c = spec.dims[s]
    p = f"stage{s + 1}.b{i}"
    out = []
    if spec.block_uses_attn(s, i):
        out += [(f"{p}.norm.g", (c,), _ONE), (f"{p}.norm.b", (c,), _ZERO),
                (f"{p}.rescale.wg", (c,), _ZERO), (f"{p}.rescale.bg", (c,), _ONE),
                (f"{p}.rescale.wb", (c,), _ZERO), (f"{p}.rescale.bb", (c,), _ZERO),
                (f"{p}.qkv.w", (c, 3 * c), _TN), (f"{p}.qkv.b", (3 * c,), _ZERO),
                (f"{p}.bias.table",
                 ((2 * spec.window_size - 1) ** 2, spec.heads[s]), _TN)]
    else:
        out += [(f"{p}.v.w", (c, c), _TN), (f"{p}.v.b", (c,), _ZERO)]
    if spec.conv_type == DWCONV:
        out += [(f"{p}.conv.k", (5, 5, 1, c), _TN), (f"{p}.conv.b", (c,), _ZERO)]
    else:
        out += [(f"{p}.conv.k1", (3, 3, c, c), _TN), (f"{p}.conv.b1", (c,), _ZERO),
                (f"{p}.conv.k2", (3, 3, c, c), _TN), (f"{p}.conv.b2", (c,), _ZERO)]
    m = spec.mlp_ratios[s]
    out += [(f"{p}.proj.w", (c, c), _TN), (f"{p}.proj.b", (c,), _ZERO),
            (f"{p}.mlp.w1", (c, m * c), _TN), (f"{p}.mlp.b1", (m * c,), _ZERO),
            (f"{p}.mlp.w2", (m * c, c), _TN), (f"{p}.mlp.b2", (c,), _ZERO)]
    return out


def _fusion_entries(tag: str, c_skip: int, c: int, r: int):
    return [(f"{tag}.f.w", (c_skip, c), _TN), (f"{tag}.f.b", (c,), _ZERO),
            (f"{tag}.mlp.w1", (c, c // r), _TN), (f"{tag}.mlp.b1", (c // r,), _ZERO),
            (f"{tag}.mlp.w2", (c // r, 2 * c), _TN), (f"{tag}.mlp.b2", (2 * c,), _ZERO)]


def _parameter_entries(spec: VariantSpec):
    d = spec.dims
    r = spec.sk_reduction
    entries = [("embed.k", (3, 3, 3, d[0]), _TN), ("embed.b", (d[0],), _ZERO)]

    def stage(s):
        out = []
        for i in range(spec.blocks[s]):
            out += _block_entries(spec, s, i)
        return out

    entries += stage(0)
    entries += [("down1.k", (3, 3, d[0], d[1]), _TN), ("down1.b", (d[1],), _ZERO)]
    entries += stage(1)
    entries += [("down2.k", (3, 3, d[1], d[2]), _TN), ("down2.b", (d[2],), _ZERO)]
    entries += stage(2)
    entries += [("up1.w", (d[2], 4 * d[3]), _TN), ("up1.b", (4 * d[3],), _ZERO)]
    entries += _fusion_entries("fuse1", d[1], d[3], r)
    entries += stage(3)
    entries += [("up2.w", (d[3], 4 * d[4]), _TN), ("up2.b", (4 * d[4],), _ZERO)]
    entries += _fusion_entries("fuse2", d[0], d[4], r)
    entries += stage(4)
    entries += [("head.k", (3, 3, d[4], 4), _TN), ("head.b", (4,), _ZERO)]
    return entries


def parameter_shapes(spec: VariantSpec) -> dict[str, tuple[int, ...]]:
    """Declared parameter name -> shape, in initialization order."""
    return {name: shape for name, shape, _ in _parameter_entries(spec)}


class WeightStore:
    """Ordered named parameter arrays with bit-exact save/load."""

    def __init__(self):
        self._arrays: dict[str, np.ndarray] = {}

    def add(self, name: str, arr: np.ndarray) -> None:
        if name in self._arrays:
            raise ValueError(f"duplicate parameter name {name!r}")
        if " " in name:
            raise ValueError("parameter names may not contain spaces")
        self._arrays[name] = np.ascontiguousarray(arr, dtype=np.float32)

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __contains__(self, name: str) -> bool:
        return name in self._arrays

    def names(self):
        return list(self._arrays)

    def items(self):
        return self._arrays.items()

    def total_params(self) -> int:
        return sum(a.size for a in self._arrays.values())

    def save(self, stem) -> None:
        stem = str(stem)
        lines = []
        offset = 0
        with open(stem + ".bin", "wb") as f:
            for name, arr in self._arrays.items():
                dims = " ".join(str(d) for d in arr.shape)
                lines.append(f"{name} {dims} {offset}")
                raw = np.ascontiguousarray(arr, dtype="<f4").tobytes()
                f.write(raw)
                offset += len(raw)
        with open(stem + ".manifest", "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, stem, spec: VariantSpec | None = None) -> "WeightStore":
        """Read a manifest/payload pair; with a spec, validate every shape."""
        stem = str(stem)
        with open(stem + ".manifest", "r", encoding="utf-8") as f:
            manifest = [ln.strip() for ln in f if ln.strip()]
        with open(stem + ".bin", "rb") as f:
            payload = f.read()

        expected = parameter_shapes(spec) if spec is not None else None
        store = cls()
        for ln in manifest:
            parts = ln.split()
            if len(parts) < 3:
                raise WeightStoreError(f"malformed manifest line: {ln!r}")
            name, offset = parts[0], int(parts[-1])
            shape = tuple(int(v) for v in parts[1:-1])
            if expected is not None:
                if name not in expected:
                    raise UnknownWeightError(f"undeclared parameter {name!r}")
                if shape != expected[name]:
                    raise WeightShapeError(
                        f"{name}: stored shape {shape}, architecture "
                        f"wants {expected[name]}")
            n = int(np.prod(shape)) if shape else 1
            end = offset + 4 * n
            if end > len(payload):
                raise WeightTruncationError(
                    f"{name}: needs bytes [{offset}, {end}) but payload has "
                    f"{len(payload)}")
            arr = np.frombuffer(payload[offset:end], dtype="<f4").reshape(shape)
            store.add(name, arr.astype(np.float32))
        if expected is not None:
            missing = [n for n in expected if n not in store]
            if missing:
                raise WeightShapeError(f"missing parameters: {missing[:5]}")
        return store


def build(variant, seed: int = 0) -> tuple[VariantSpec, WeightStore]:
    """Instantiate a variant (by letter or custom spec) with seeded weights."""
    if isinstance(variant, str):
        if variant not in VARIANTS:
            raise ValueError(
                f"unknown variant {variant!r}; choose from {sorted(VARIANTS)}")
        spec = VARIANTS[variant]
    else:
        spec = variant
    spec.validate()
    rng = np.random.default_rng(seed)
    store = WeightStore()
    for name, shape, init in _parameter_entries(spec):
        if init == _TN:
            store.add(name, trunc_normal(rng, shape))
        elif init == _ONE:
            store.add(name, np.ones(shape, np.float32))
        else:
            store.add(name, np.zeros(shape, np.float32))
    return spec, store


# ---------------------------------------------------------------------------
# fusion and reconstruction primitives


@dataclass
class SKFusionParams:
    """Channel-attention fusion of a projected skip branch with a main branch."""
    f_w: np.ndarray
    f_b: np.ndarray
    mlp_w1: np.ndarray
    mlp_b1: np.ndarray
    mlp_w2: np.ndarray
    mlp_b2: np.ndarray


def sk_fusion(x1: np.ndarray, x2: np.ndarray, p: SKFusionParams,
              act: Activation | None = None) -> np.ndarray:
    """Fuse skip x1 (projected) with x2: a1*f(x1) + a2*x2 + x2, a1+a2 = 1.

    The weights come from a squeeze MLP on the global average of the summed
    branches, softmaxed across the two branches per channel.
    """
    act = act or relu()
    check_tensor(x1)
    check_tensor(x2)
    if x1.shape[:3] != x2.shape[:3]:
        raise ValueError(f"spatial extents differ: {x1.shape} vs {x2.shape}")
    x1h = linear(x1, p.f_w, p.f_b)
    if x1h.shape != x2.shape:
        raise ValueError("projection does not reach the main branch's channels")
    pooled = (x1h.astype(np.float64) + x2).mean(axis=(1, 2))  # exact GAP, (b,c)
    pooled = pooled.astype(np.float32)
    hidden = act.apply(pooled @ p.mlp_w1 + p.mlp_b1)
    logits = (hidden @ p.mlp_w2 + p.mlp_b2).reshape(len(pooled), 2, -1)
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    a = e / e.sum(axis=1, keepdims=True)
    a1 = a[:, 0][:, None, None, :].astype(np.float32)
    a2 = a[:, 1][:, None, None, :].astype(np.float32)
    return check_tensor((a1 * x1h + a2 * x2 + x2).astype(np.float32))


def soft_reconstruct(o: np.ndarray, img: np.ndarray) -> np.ndarray:
    """Combine the 4-channel head output with the input: K*I + B + I."""
    check_tensor(o)
    check_tensor(img)
    if o.shape[3] != 4:
        raise ValueError(f"head output needs 4 channels, got {o.shape[3]}")
    if img.shape[3] != 3:
        raise ValueError(f"input image needs 3 channels, got {img.shape[3]}")
    if o.shape[:3] != img.shape[:3]:
        raise ValueError("head output and image extents differ")
    k, b = o[:, :, :, :1], o[:, :, :, 1:]
    return check_tensor((k * img + b + img).astype(np.float32))


# ---------------------------------------------------------------------------
# assembly and forward


@dataclass
class BlockModule:
    use_attn: bool
    layout: WindowLayout
    attn: AttentionParams
    norm: NormParams | None
    rescale: RescaleWeights | None
    bias: RelPosBias | None
    mlp_w1: np.ndarray = field(repr=False, default=None)
    mlp_b1: np.ndarray = field(repr=False, default=None)
    mlp_w2: np.ndarray = field(repr=False, default=None)
    mlp_b2: np.ndarray = field(repr=False, default=None)


@dataclass
class Assembled:
    spec: VariantSpec
    store: WeightStore
    act: Activation
    stages: list


def _assemble_block(spec, store, s, i, act) -> BlockModule:
    c = spec.dims[s]
    p = f"stage{s + 1}.b{i}"
    use_attn = spec.block_uses_attn(s, i)
    if spec.conv_type == DWCONV:
        conv = ConvBranch(DWCONV, store[f"{p}.conv.k"], store[f"{p}.conv.b"])
    else:
        conv = ConvBranch(CONVBLOCK, store[f"{p}.conv.k1"], store[f"{p}.conv.b1"],
                          store[f"{p}.conv.k2"], store[f"{p}.conv.b2"], act)
    if use_attn:
        qkv_w = store[f"{p}.qkv.w"]
        qkv_b = store[f"{p}.qkv.b"]
        attn = AttentionParams(
            v_w=qkv_w[:, 2 * c:], v_b=qkv_b[2 * c:],
            proj_w=store[f"{p}.proj.w"], proj_b=store[f"{p}.proj.b"],
            heads=spec.heads[s], qk_w=qkv_w[:, :2 * c], qk_b=qkv_b[:2 * c],
            conv=conv)
        norm = NormParams(store[f"{p}.norm.g"], store[f"{p}.norm.b"])
        rescale = RescaleWeights(store[f"{p}.rescale.wg"], store[f"{p}.rescale.bg"],
                                 store[f"{p}.rescale.wb"], store[f"{p}.rescale.bb"])
        bias = RelPosBias(store[f"{p}.bias.table"],
                          RelPosBias.build_index(spec.window_size))
    else:
        attn = AttentionParams(
            v_w=store[f"{p}.v.w"], v_b=store[f"{p}.v.b"],
            proj_w=store[f"{p}.proj.w"], proj_b=store[f"{p}.proj.b"],
            heads=spec.heads[s], conv=conv)
        norm = rescale = bias = None
    layout = WindowLayout(spec.window_size, spec.block_shift(s, i),
                          Scheme.REFLECTION_PAD)
    return BlockModule(use_attn, layout, attn, norm, rescale, bias,
                       store[f"{p}.mlp.w1"], store[f"{p}.mlp.b1"],
                       store[f"{p}.mlp.w2"], store[f"{p}.mlp.b2"])


def assemble(spec: VariantSpec, store: WeightStore,
             act: Activation | None = None) -> Assembled:
    act = act or relu()
    stages = [[_assemble_block(spec, store, s, i, act)
               for i in range(spec.blocks[s])] for s in range(STAGES)]
    return Assembled(spec, store, act, stages)


def _block_forward(x: np.ndarray, blk: BlockModule, act: Activation) -> np.ndarray:
    if blk.use_attn:
        y, pair = rescalenorm_begin(x, blk.norm, blk.rescale)
        y = aggregate(y, blk.attn, blk.layout, use_attention=True, bias=blk.bias)
        y = rescalenorm_end(y, pair)
    else:
        y = aggregate(x, blk.attn, blk.layout, use_attention=False)
    x = x + y
    hidden = act.apply(linear(x, blk.mlp_w1, blk.mlp_b1))
    return x + linear(hidden, blk.mlp_w2, blk.mlp_b2)


def _shuffle_up(x: np.ndarray) -> np.ndarray:
    """Rearrange (b,h,w,4c) -> (b,2h,2w,c)."""
    b, h, w, c4 = x.shape
    c = c4 // 4
    x = x.reshape(b, h, w, 2, 2, c).transpose(0, 1, 3, 2, 4, 5)
    return np.ascontiguousarray(x).reshape(b, 2 * h, 2 * w, c)


def _fusion_params(store: WeightStore, tag: str) -> SKFusionParams:
    return SKFusionParams(store[f"{tag}.f.w"], store[f"{tag}.f.b"],
                          store[f"{tag}.mlp.w1"], store[f"{tag}.mlp.b1"],
                          store[f"{tag}.mlp.w2"], store[f"{tag}.mlp.b2"])


def forward(spec: VariantSpec, store: WeightStore, img: np.ndarray,
            act: Activation | None = None) -> np.ndarray:
    """Full restoration pass: (b,H,W,3) in [0,1]-ish -> (b,H,W,3)."""
    act = act or relu()
    check_tensor(img)
    _, h, w, c = img.shape
    if c != 3:
        raise ValueError(f"expected 3 input channels, got {c}")
    if h % 4 or w % 4:
        raise ValueError(
            f"extents {h}x{w} must be divisible by 4; reflect-pad to "
            f"{-(-h // 4) * 4}x{-(-w // 4) * 4} and crop the result")
    net = assemble(spec, store, act)

    def run(stage_idx, x):
        for blk in net.stages[stage_idx]:
            x = _block_forward(x, blk, act)
        return x

    x = conv2d(img, store["embed.k"], store["embed.b"], pad_mode="reflect")
    skip1 = run(0, x)
    x = conv2d(skip1, store["down1.k"], store["down1.b"], stride=2,
               pad_mode="reflect")
    skip2 = run(1, x)
    x = conv2d(skip2, store["down2.k"], store["down2.b"], stride=2,
               pad_mode="reflect")
    x = run(2, x)
    x = _shuffle_up(linear(x, store["up1.w"], store["up1.b"]))
    x = sk_fusion(skip2, x, _fusion_params(store, "fuse1"), act)
    x = run(3, x)
    x = _shuffle_up(linear(x, store["up2.w"], store["up2.b"]))
    x = sk_fusion(skip1, x, _fusion_params(store, "fuse2"), act)
    x = run(4, x)
    o = conv2d(x, store["head.k"], store["head.b"], pad_mode="reflect")
    return soft_reconstruct(o, img)


# ---------------------------------------------------------------------------
# overhead accounting


def count_params(spec: VariantSpec) -> int:
    """Exact declared parameter count; equals any built store's size."""
    spec.validate()
    return sum(int(np.prod(shape)) for shape in parameter_shapes(spec).values())


def conv_macs(k: int, cin: int, cout: int, h: int, w: int, groups: int = 1) -> int:
    return k * k * cin * cout * h * w // groups


def linear_macs(cin: int, cout: int, h: int, w: int) -> int:
    return cin * cout * h * w


def _attention_macs(spec: VariantSpec, stage: int, h: int, w: int,
                    shift: int) -> int:
    ws = spec.window_size
    top = left = shift
    bottom = (ws - (h + shift) % ws) % ws
    right = (ws - (w + shift) % ws) % ws
    windows = ((h + top + bottom) // ws) * ((w + left + right) // ws)
    tokens = ws * ws
    # per window, per head: QK^T and weights@V, each tokens^2 * head_dim
    return windows * 2 * tokens * tokens * spec.dims[stage]


def _block_macs(spec: VariantSpec, s: int, i: int, h: int, w: int) -> int:
    c = spec.dims[s]
    m = spec.mlp_ratios[s]
    total = linear_macs(c, c, h, w)          # value projection
    if spec.conv_type == DWCONV:
        total += conv_macs(5, c, c, h, w, groups=c)
    else:
        total += 2 * conv_macs(3, c, c, h, w)
    if spec.block_uses_attn(s, i):
        total += linear_macs(c, 2 * c, h, w)  # query/key projection
        total += _attention_macs(spec, s, h, w, spec.block_shift(s, i))
    total += linear_macs(c, c, h, w)          # output projection
    total += linear_macs(c, m * c, h, w) + linear_macs(m * c, c, h, w)
    return total


def count_detail(spec: VariantSpec, h: int, w: int) -> dict[str, tuple[int, int]]:
    """Per-section (params, MACs) at the given input extents."""
    spec.validate()
    if h % 4 or w % 4:
        raise ValueError(f"extents {h}x{w} must be divisible by 4")
    d = spec.dims
    r = spec.sk_reduction
    shapes = parameter_shapes(spec)

    def params_of(prefix):
        return sum(int(np.prod(sh)) for name, sh in shapes.items()
                   if name.startswith(prefix))

    res = {0: (h, w), 1: (h // 2, w // 2), 2: (h // 4, w // 4),
           3: (h // 2, w // 2), 4: (h, w)}
    detail: dict[str, tuple[int, int]] = {}
    detail["embed"] = (params_of("embed."), conv_macs(3, 3, d[0], h, w))
    for s in range(STAGES):
        hs, ws_ = res[s]
        macs = sum(_block_macs(spec, s, i, hs, ws_)
                   for i in range(spec.blocks[s]))
        detail[f"stage{s + 1}"] = (params_of(f"stage{s + 1}."), macs)
    detail["down1"] = (params_of("down1."),
                       conv_macs(3, d[0], d[1], h // 2, w // 2))
    detail["down2"] = (params_of("down2."),
                       conv_macs(3, d[1], d[2], h // 4, w // 4))
    detail["up1"] = (params_of("up1."),
                     linear_macs(d[2], 4 * d[3], h // 4, w // 4))
    detail["up2"] = (params_of("up2."),
                     linear_macs(d[3], 4 * d[4], h // 2, w // 2))
    detail["fuse1"] = (params_of("fuse1."),
                       linear_macs(d[1], d[3], h // 2, w // 2)
                       + d[3] * (d[3] // r) + (d[3] // r) * 2 * d[3])
    detail["fuse2"] = (params_of("fuse2."),
                       linear_macs(d[0], d[4], h, w)
                       + d[4] * (d[4] // r) + (d[4] // r) * 2 * d[4])
    detail["head"] = (params_of("head."), conv_macs(3, d[4], 4, h, w))
    return detail


def count_macs(spec: VariantSpec, h: int, w: int) -> int:
    """Analytic multiply-accumulate count for one (1,h,w,3) forward pass."""
    return sum(m for _, m in count_detail(spec, h, w).values())
