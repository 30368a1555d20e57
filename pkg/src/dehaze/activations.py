"""Elementwise nonlinearities with analytic derivatives.

The smooth rectifier ``soft_relu`` is (x + sqrt(x^2 + a^2) - a) / 2; at a=0 it
collapses to the exact ReLU. GELU is the exact Gaussian-CDF form, not the tanh
approximation. All maps preserve the input dtype so float64 grids stay float64
for finite-difference checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)

KINDS = ("relu", "leaky_relu", "gelu", "soft_relu")


@dataclass(frozen=True)
class Activation:
    kind: str
    param: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown activation kind {self.kind!r}")
        if self.kind == "leaky_relu" and not 0.0 < self.param < 1.0:
            raise ValueError("leaky_relu slope must be in (0, 1)")
        if self.kind == "soft_relu" and self.param < 0.0:
            raise ValueError("soft_relu shape parameter must be >= 0")

    def apply(self, x: np.ndarray) -> np.ndarray:
        return apply(self, x)

    def derivative(self, x: np.ndarray) -> np.ndarray:
        return derivative(self, x)


def relu() -> Activation:
    return Activation("relu")


def leaky_relu(slope: float = 0.1) -> Activation:
    return Activation("leaky_relu", slope)


def gelu() -> Activation:
    return Activation("gelu")


def soft_relu(alpha: float = 0.1) -> Activation:
    return Activation("soft_relu", alpha)


def apply(act: Activation, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if act.kind == "relu":
        return np.maximum(x, 0)
    if act.kind == "leaky_relu":
        return np.where(x >= 0, x, x * x.dtype.type(act.param))
    if act.kind == "gelu":
        return (0.5 * x * (1.0 + erf(x * _INV_SQRT2))).astype(x.dtype, copy=False)
    # soft_relu; a=0 short-circuits to ReLU so the equivalence is bit-exact
    a = act.param
    if a == 0.0:
        return np.maximum(x, 0)
    return ((x + np.sqrt(x * x + a * a) - a) * 0.5).astype(x.dtype, copy=False)


def derivative(act: Activation, x: np.ndarray) -> np.ndarray:
    """Analytic derivative; piecewise-linear kinds take the right-hand value at 0."""
    x = np.asarray(x)
    if act.kind == "relu":
        return (x >= 0).astype(x.dtype)
    if act.kind == "leaky_relu":
        return np.where(x >= 0, 1.0, act.param).astype(x.dtype)
    if act.kind == "gelu":
        phi = np.exp(-0.5 * x * x) * _INV_SQRT_2PI
        cdf = 0.5 * (1.0 + erf(x * _INV_SQRT2))
        return (cdf + x * phi).astype(x.dtype, copy=False)
    a = act.param
    if a == 0.0:
        return (x >= 0).astype(x.dtype)
    return ((1.0 + x / np.sqrt(x * x + a * a)) * 0.5).astype(x.dtype, copy=False)
