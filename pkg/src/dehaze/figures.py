"""Report figures rendered to files next to the delimited CLI output.

Everything draws through the Agg backend; nothing here opens a window.
"""

from __future__ import annotations

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import activations as act
from . import hazegen


def _finish(fig, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def overhead_figure(path, variant: str, detail: dict) -> str:
    """Per-section parameter and MAC bars from ``network.count_detail``."""
    names = list(detail)
    params = [detail[n][0] for n in names]
    macs = [detail[n][1] for n in names]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    xs = np.arange(len(names))
    ax1.bar(xs, np.array(params) / 1e3, color="tab:blue")
    ax1.set_ylabel("parameters (K)")
    ax2.bar(xs, np.array(macs) / 1e6, color="tab:orange")
    ax2.set_ylabel("MACs (M)")
    for ax in (ax1, ax2):
        ax.set_xticks(xs)
        ax.set_xticklabels(names, rotation=60, ha="right", fontsize=7)
    fig.suptitle(f"variant {variant}: overhead by section")
    return _finish(fig, path)


def activation_figure(path) -> str:
    """Response and derivative curves of the four supported nonlinearities."""
    grid = np.linspace(-3, 3, 601)
    kinds = [("ReLU", act.relu()), ("LeakyReLU 0.1", act.leaky_relu(0.1)),
             ("GELU", act.gelu()), ("SoftReLU 0.1", act.soft_relu(0.1))]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    for label, a in kinds:
        ax1.plot(grid, a.apply(grid), label=label, lw=1.2)
        ax2.plot(grid, a.derivative(grid), label=label, lw=1.2)
    ax1.set_title("response")
    ax2.set_title("derivative")
    for ax in (ax1, ax2):
        ax.grid(alpha=0.3)
        ax.legend(fontsize=7)
    return _finish(fig, path)


def gamma_figure(path, coeffs=hazegen.GAMMA_COEFFS) -> str:
    """Scattering exponent vs haze reflectance: raw cubic and clipped fit."""
    x = np.linspace(0, 1, 501)
    a0, a1, a2, a3 = coeffs
    raw = ((a3 * x + a2) * x + a1) * x + a0
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(x, raw, "--", color="gray", lw=1, label="cubic fit")
    ax.plot(x, hazegen.gamma_map(x, coeffs), color="tab:red", lw=1.5,
            label="clipped to [0, 4]")
    ax.set_xlabel("haze reflectance")
    ax.set_ylabel("scattering exponent")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    return _finish(fig, path)


def transmission_figure(path, omega: float,
                        wavelengths=None) -> str:
    """Per-band transmission against the reference for a given density."""
    wavelengths = wavelengths or {
        k: v for k, v in hazegen.LANDSAT8_WAVELENGTHS.items() if k != "B9"}
    t1 = np.linspace(1 - omega, 1, 301)
    rho = (1 - t1) / omega
    gam = hazegen.gamma_map(omega * rho).astype(np.float64)
    lam1 = hazegen.LANDSAT8_WAVELENGTHS["B1"]
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for name, lam in sorted(wavelengths.items(), key=lambda kv: kv[1]):
        tj = hazegen.transmission_channel(t1, lam1, lam, gam)
        ax.plot(t1, tj, lw=1.2, label=f"{name} ({lam:.3f} um)")
    ax.plot(t1, t1, ":", color="black", lw=0.8, label="reference")
    ax.set_xlabel("reference transmission")
    ax.set_ylabel("channel transmission")
    ax.set_title(f"omega={omega:.3f}")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7)
    return _finish(fig, path)


def synthesis_figure(path, clean_rgb: np.ndarray, hazy_rgb: np.ndarray,
                     t1: np.ndarray) -> str:
    """Side-by-side clean / hazy render plus the transmission template."""
    fig, axes = plt.subplots(1, 3, figsize=(11, 4))
    axes[0].imshow(clean_rgb)
    axes[0].set_title("clean")
    axes[1].imshow(hazy_rgb)
    axes[1].set_title("hazy")
    im = axes[2].imshow(t1, cmap="viridis", vmin=0, vmax=1)
    axes[2].set_title("reference transmission")
    fig.colorbar(im, ax=axes[2], fraction=0.046)
    for ax in axes:
        ax.set_xticks([])
        ax.set_yticks([])
    return _finish(fig, path)


def error_map_figure(path, a: np.ndarray, b: np.ndarray) -> str:
    """Absolute difference heat map between two images, scaled 8x."""
    diff = np.abs(np.asarray(a, np.float64) - np.asarray(b, np.float64))
    if diff.ndim == 4:
        diff = diff[0]
    if diff.ndim == 3:
        diff = diff.mean(axis=-1)
    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.imshow(np.clip(diff * 8, 0, 1), cmap="magma", vmin=0, vmax=1)
    fig.colorbar(im, ax=ax, fraction=0.046)
    ax.set_title("|a - b| x8")
    ax.set_xticks([])
    ax.set_yticks([])
    return _finish(fig, path)
