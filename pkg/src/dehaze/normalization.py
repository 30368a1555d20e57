"""Feature-map normalization schemes.

Three flavors over (b,h,w,c) tensors:

* ``layernorm_token`` -- per-token statistics over the channel axis alone.
  Tokens that differ only by a shared offset become indistinguishable.
* ``layernorm_sample`` -- per-sample statistics over (h,w,c) jointly, which
  keeps relative brightness/contrast between tokens intact.
* rescale normalization -- ``layernorm_sample`` whose consumed (mean, std) are
  re-injected after the wrapped block as learned per-channel transforms:
  begin() normalizes and emits (std*Wg + Bg, mean*Wb + Bb); end() applies
  y * gamma_out + beta_out. At init (Wg=Wb=0, Bg=1, Bb=0) end() is the
  identity, so the pair degenerates to plain per-sample normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import EPS, AxisStats, check_tensor, reduce_stats


@dataclass
class NormParams:
    """Learned per-channel affine applied right after standardization."""
    gain: np.ndarray  # (c,)
    bias: np.ndarray  # (c,)

    @classmethod
    def identity(cls, c: int) -> "NormParams":
        return cls(np.ones(c, np.float32), np.zeros(c, np.float32))

    def validate(self, c: int) -> None:
        if self.gain.shape != (c,) or self.bias.shape != (c,):
            raise ValueError(
                f"norm params shaped {self.gain.shape}/{self.bias.shape}, need ({c},)")


@dataclass
class RescaleWeights:
    """Linear maps taking per-sample (std, mean) to per-channel rescale pairs."""
    w_gamma: np.ndarray  # (c,)
    b_gamma: np.ndarray  # (c,)
    w_beta: np.ndarray   # (c,)
    b_beta: np.ndarray   # (c,)

    @classmethod
    def init(cls, c: int) -> "RescaleWeights":
        # Bg=1, Bb=0 makes the deferred rescale start as the identity
        return cls(np.zeros(c, np.float32), np.ones(c, np.float32),
                   np.zeros(c, np.float32), np.zeros(c, np.float32))


@dataclass
class RescalePair:
    """Deferred per-(batch, channel) scale and bias, shaped (b,1,1,c)."""
    gamma_out: np.ndarray
    beta_out: np.ndarray


def _standardize(x: np.ndarray, stats: AxisStats) -> np.ndarray:
    return ((x - stats.mean) / stats.std).astype(np.float32)


def layernorm_token(x: np.ndarray, p: NormParams, eps: float = EPS) -> np.ndarray:
    """Standardize each (b,h,w) token over its channels, then apply the affine."""
    check_tensor(x)
    p.validate(x.shape[3])
    stats = reduce_stats(x, "channel", eps)
    return check_tensor(_standardize(x, stats) * p.gain + p.bias)


def layernorm_sample(x: np.ndarray, p: NormParams,
                     eps: float = EPS) -> tuple[np.ndarray, AxisStats]:
    """Standardize each sample over all of (h,w,c); returns the consumed stats."""
    check_tensor(x)
    p.validate(x.shape[3])
    stats = reduce_stats(x, "sample", eps)
    return check_tensor(_standardize(x, stats) * p.gain + p.bias), stats


def rescalenorm_begin(x: np.ndarray, p: NormParams, w: RescaleWeights,
                      eps: float = EPS) -> tuple[np.ndarray, RescalePair]:
    """Per-sample normalization that also emits the deferred rescale pair."""
    y, stats = layernorm_sample(x, p, eps)
    # stats are (b,1,1,1); the products broadcast out to (b,1,1,c)
    gamma_out = (stats.std * w.w_gamma + w.b_gamma).astype(np.float32)
    beta_out = (stats.mean * w.w_beta + w.b_beta).astype(np.float32)
    return y, RescalePair(gamma_out, beta_out)


def rescalenorm_end(y: np.ndarray, r: RescalePair) -> np.ndarray:
    """Re-inject the saved statistics: y * gamma_out + beta_out."""
    check_tensor(y)
    return check_tensor((y * r.gamma_out + r.beta_out).astype(np.float32))
