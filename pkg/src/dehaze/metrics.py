"""Image quality metrics and a derivative checker.

PSNR assumes [0, 1] data: 10*log10(1/MSE), with math.inf for identical
inputs. SSIM is the mean local index under an 11x11 Gaussian window
(sigma 1.5, C1=0.01^2, C2=0.03^2); multi-channel inputs average the
per-channel scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


@dataclass(frozen=True)
class MetricReport:
    psnr: float
    ssim: float

    def lines(self) -> list[str]:
        p = "inf" if math.isinf(self.psnr) else f"{self.psnr:.4f}"
        return [f"psnr={p}", f"ssim={self.ssim:.6f}"]


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"extent mismatch: {a.shape} vs {b.shape}")
    mse = np.mean(np.square(a - b))
    if mse == 0.0:
        return math.inf
    return float(10.0 * np.log10(1.0 / mse))


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    ax = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-0.5 * np.square(ax / sigma))
    k = np.outer(g, g)
    return k / k.sum()


def _local_means(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # 'valid' windowed weighting; desk-scale images make this cheap
    size = kernel.shape[0]
    win = np.lib.stride_tricks.sliding_window_view(img, (size, size))
    return np.tensordot(win, kernel, axes=([2, 3], [0, 1]))


def _ssim_single(a: np.ndarray, b: np.ndarray) -> float:
    kernel = _gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA)
    mu_a = _local_means(a, kernel)
    mu_b = _local_means(b, kernel)
    var_a = _local_means(a * a, kernel) - mu_a * mu_a
    var_b = _local_means(b * b, kernel) - mu_b * mu_b
    cov = _local_means(a * b, kernel) - mu_a * mu_b
    num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(num / den))


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"extent mismatch: {a.shape} vs {b.shape}")
    if a.ndim == 3:
        return float(np.mean([_ssim_single(a[..., c], b[..., c])
                              for c in range(a.shape[2])]))
    if a.ndim != 2:
        raise ValueError("ssim expects (h,w) or (h,w,c) images")
    if min(a.shape[:2]) < SSIM_WINDOW:
        raise ValueError(
            f"image extents {a.shape[:2]} smaller than the "
            f"{SSIM_WINDOW}x{SSIM_WINDOW} window")
    return _ssim_single(a, b)


def report(a: np.ndarray, b: np.ndarray) -> MetricReport:
    return MetricReport(psnr=psnr(a, b), ssim=ssim(a, b))


def fd_check(f, df, grid: np.ndarray, step: float = 1e-3) -> float:
    """Max |df(x) - central difference of f| over the grid."""
    if step <= 0:
        raise ValueError("step must be positive")
    grid = np.asarray(grid, dtype=np.float64)
    numeric = (np.asarray(f(grid + step), np.float64)
               - np.asarray(f(grid - step), np.float64)) / (2.0 * step)
    return float(np.max(np.abs(np.asarray(df(grid), np.float64) - numeric)))
