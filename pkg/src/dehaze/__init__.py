"""Windowed-transformer dehazing inference, haze synthesis and accounting."""

from .activations import Activation, gelu, leaky_relu, relu, soft_relu
from .network import (VARIANTS, VariantSpec, WeightStore, build, count_macs,
                      count_params, forward)
from .tensor import load_dft1, save_dft1

__all__ = [
    "Activation", "relu", "leaky_relu", "gelu", "soft_relu",
    "VARIANTS", "VariantSpec", "WeightStore", "build",
    "count_params", "count_macs", "forward",
    "save_dft1", "load_dft1",
]

__version__ = "0.1.0"
