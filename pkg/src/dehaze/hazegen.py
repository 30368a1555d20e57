"""Wavelength-aware non-homogeneous haze synthesis for multispectral rasters.

The cirrus channel of a real hazy acquisition serves as the spatial template:
after a 0.1% linear stretch it becomes the reference transmission
t1 = 1 - omega * rho9. Each channel's transmission follows the power law
t_j = t1 ** ((lambda1 / lambda_j) ** gamma), where the scattering exponent
gamma is a clipped cubic in the haze reflectance omega * rho9 (dense haze
scatters with weaker wavelength dependence). Composition uses a decayed
ground term so sufficiently dense haze blots out the surface completely:

    I_j = J_j * clip(1 - xi * (1 - t_j), 0, 1) + A_j * (1 - t_j)

All raster math runs in float64 and is returned as float32.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Landsat-8 OLI band centers, micrometers (B1 is the reference channel,
# B9 is the cirrus template)
LANDSAT8_WAVELENGTHS = {
    "B1": 0.443, "B2": 0.482, "B3": 0.562, "B4": 0.655,
    "B5": 0.865, "B6": 1.609, "B7": 2.201, "B9": 1.373,
}

# cubic fit of the scattering exponent against haze reflectance, a0..a3
GAMMA_COEFFS = (6.537, -27.465, 41.224, -21.547)

GAMMA_CLIP = (0.0, 4.0)

DENSITY_RANGES = {"L": (0.100, 0.399), "M": (0.400, 0.699), "D": (0.700, 0.999)}

T1_FLOOR = 1e-4  # guards 0**x for corrupted inputs; unreachable for omega < 1


@dataclass
class MultiSpectralImage:
    """Per-channel rasters on a shared grid, linear reflectance in [0, 1]."""
    names: list[str]
    rasters: list[np.ndarray]
    wavelengths: list[float]
    cirrus: np.ndarray | None = None

    def __post_init__(self):
        if not (len(self.names) == len(self.rasters) == len(self.wavelengths)):
            raise ValueError("names, rasters and wavelengths must align")
        if not self.rasters:
            raise ValueError("image has no channels")
        shape = self.rasters[0].shape
        for r in self.rasters:
            if r.ndim != 2 or r.shape != shape:
                raise ValueError("all rasters must share 2-d extents")
        for lam in self.wavelengths:
            if lam <= 0:
                raise ValueError("wavelengths must be positive")

    @property
    def extents(self) -> tuple[int, int]:
        return self.rasters[0].shape


@dataclass
class SynthesisParams:
    """Knobs of one synthesis run."""
    omega: float
    xi: float = 1.25
    coeffs: tuple[float, float, float, float] = GAMMA_COEFFS
    gamma_clip: tuple[float, float] = GAMMA_CLIP
    tprime_clip: tuple[float, float] = (0.0, 1.0)
    ref_wavelength: float = LANDSAT8_WAVELENGTHS["B1"]

    def __post_init__(self):
        if not 0.0 < self.omega < 1.0:
            raise ValueError(f"omega must be in (0,1), got {self.omega}")
        if self.xi < 1.0:
            raise ValueError(f"decay factor must be >= 1, got {self.xi}")


def stretch_cirrus(raw: np.ndarray, lo_pct: float = 0.1,
                   hi_pct: float = 99.9) -> np.ndarray:
    """Two-sided linear stretch removing the dark level: percentiles -> [0, 1].

    Values at/below the low percentile map to 0 and at/above the high one to
    1, so a dark offset cannot keep the peak transmission under 1.
    """
    raw = np.asarray(raw, dtype=np.float64)
    lo = np.percentile(raw, lo_pct)
    hi = np.percentile(raw, hi_pct)
    if hi <= lo:
        raise ValueError("cirrus raster is (nearly) constant; stretch undefined")
    return np.clip((raw - lo) / (hi - lo), 0.0, 1.0).astype(np.float32)


def transmission_ref(rho9: np.ndarray, omega: float) -> np.ndarray:
    """Reference-channel transmission t1 = 1 - omega * rho9, in [1-omega, 1]."""
    rho9 = np.asarray(rho9, dtype=np.float64)
    if rho9.min() < 0 or rho9.max() > 1:
        raise ValueError("cirrus reflectance must lie in [0, 1]")
    if not 0.0 < omega < 1.0:
        raise ValueError(f"omega must be in (0,1), got {omega}")
    return (1.0 - omega * rho9).astype(np.float32)


def gamma_map(haze_reflectance: np.ndarray,
              coeffs: tuple[float, float, float, float] = GAMMA_COEFFS,
              clip: tuple[float, float] = GAMMA_CLIP) -> np.ndarray:
    """Scattering exponent: clipped cubic in the haze reflectance omega*rho9."""
    x = np.asarray(haze_reflectance, dtype=np.float64)
    a0, a1, a2, a3 = coeffs
    g = ((a3 * x + a2) * x + a1) * x + a0
    return np.clip(g, clip[0], clip[1]).astype(np.float32)


def transmission_channel(t1: np.ndarray, lam_ref: float, lam_j: float,
                         gamma: np.ndarray) -> np.ndarray:
    """Per-channel transmission t_j = t1 ** ((lam_ref / lam_j) ** gamma)."""
    if lam_ref <= 0 or lam_j <= 0:
        raise ValueError("wavelengths must be positive")
    t1 = np.maximum(np.asarray(t1, dtype=np.float64), T1_FLOOR)
    expo = (lam_ref / lam_j) ** np.asarray(gamma, dtype=np.float64)
    return np.power(t1, expo).astype(np.float32)


def estimate_atmo(img: MultiSpectralImage) -> dict[str, float]:
    """Atmospheric light per channel: mean of the brightest 0.01% pixels.

    Below 10,000 pixels the quantile set would be empty, so the single
    brightest pixel stands in.
    """
    out = {}
    for name, raster in zip(img.names, img.rasters):
        flat = np.asarray(raster, dtype=np.float64).ravel()
        if flat.size == 0:
            raise ValueError(f"channel {name} is empty")
        count = max(1, int(flat.size * 1e-4))
        top = np.partition(flat, flat.size - count)[flat.size - count:]
        out[name] = float(top.mean())
    return out


def correct_atmo(a: dict[str, float], a_mean: dict[str, float],
                 ref_channels: tuple[str, str] = ("B6", "B7")) -> dict[str, float]:
    """Cross-channel correction: A'_i = A_ref * mean_i / mean_ref.

    The reference is the average of the two SWIR channels, whose estimates
    are the most reliable; per-channel dataset means supply the spectral
    shape.
    """
    r1, r2 = ref_channels
    for k in (r1, r2):
        if k not in a or k not in a_mean:
            raise ValueError(f"reference channel {k} missing from estimates")
    a_ref = (a[r1] + a[r2]) / 2.0
    mean_ref = (a_mean[r1] + a_mean[r2]) / 2.0
    if mean_ref <= 0:
        raise ValueError("reference dataset mean must be positive")
    return {k: a_ref * a_mean[k] / mean_ref for k in a}


def synthesize(img: MultiSpectralImage, rho9: np.ndarray, p: SynthesisParams,
               atmo: dict[str, float]) -> MultiSpectralImage:
    """Render the hazy counterpart of a clean multispectral image.

    Where the decayed ground term clips to zero the output carries no trace
    of the clean image, only the airlight A_j * (1 - t_j).
    """
    rho9 = np.asarray(rho9, dtype=np.float64)
    if rho9.shape != img.extents:
        raise ValueError(
            f"cirrus extents {rho9.shape} differ from image {img.extents}")
    for name in img.names:
        if name not in atmo:
            raise ValueError(f"no atmospheric light for channel {name}")
        if not 0.0 < atmo[name] <= 1.0:
            raise ValueError(f"atmospheric light for {name} outside (0, 1]")

    t1 = transmission_ref(rho9, p.omega).astype(np.float64)
    gamma = gamma_map(p.omega * rho9, p.coeffs, p.gamma_clip).astype(np.float64)
    hazy = []
    for name, raster, lam in zip(img.names, img.rasters, img.wavelengths):
        tj = transmission_channel(t1, p.ref_wavelength, lam, gamma)
        tj = tj.astype(np.float64)
        tp = np.clip(1.0 - p.xi * (1.0 - tj), p.tprime_clip[0], p.tprime_clip[1])
        ij = np.asarray(raster, dtype=np.float64) * tp + atmo[name] * (1.0 - tj)
        hazy.append(np.clip(ij, 0.0, 1.0).astype(np.float32))
    return MultiSpectralImage(list(img.names), hazy, list(img.wavelengths),
                              cirrus=img.cirrus)


def sample_omega(density: str, rng: np.random.Generator) -> float:
    """Draw a haze density from the truncated Gaussian of the named range."""
    if density not in DENSITY_RANGES:
        raise ValueError(
            f"density must be one of {sorted(DENSITY_RANGES)}, got {density!r}")
    lo, hi = DENSITY_RANGES[density]
    mid, std = (lo + hi) / 2.0, (hi - lo) / 4.0
    while True:
        w = rng.normal(mid, std)
        if lo <= w <= hi:
            return float(w)


def rgb_render(img: MultiSpectralImage,
               bands: tuple[str, str, str] = ("B4", "B3", "B2"),
               gamma: float = 1.0 / 2.2) -> np.ndarray:
    """Gamma-corrected 8-bit (h, w, 3) view using the visible bands."""
    try:
        idx = [img.names.index(b) for b in bands]
    except ValueError as e:
        raise ValueError(f"rgb render needs channels {bands}: {e}") from e
    stack = np.stack([np.asarray(img.rasters[i], np.float64) for i in idx], axis=-1)
    srgb = np.power(np.clip(stack, 0.0, 1.0), gamma)
    return np.clip(np.rint(srgb * 255.0), 0, 255).astype(np.uint8)
