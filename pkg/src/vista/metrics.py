"""Perceptual rejection filter based on multi-scale structural dissimilarity.

The distance between two images is::

    d(a, b) = mean over scales s in {1, 2, 4} of (1 - SSIM_s(a, b)) / 2

where scale s means s-fold dyadic downsampling (2x2 box averaging applied
repeatedly) and SSIM uses the standard 11x11 Gaussian window with
sigma = 1.5, constants K1 = 0.01, K2 = 0.03, dynamic range 255, computed
per channel over valid (fully-covered) windows and averaged. The result is
a symmetric pseudo-metric in [0, 1]: zero on identical inputs, roughly 0.5
between maximally dissimilar constant images.

This is a deterministic, dependency-free stand-in for a learned perceptual
distance; because its scale differs from such metrics, the default
rejection threshold here is 0.35 (see FilterParams).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import ConfigError, GeometryError

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DYNAMIC_RANGE = 255.0
SCALES = (1, 2, 4)

DEFAULT_ETA = 0.35
DEFAULT_MAX_TRIES = 5


@dataclass(frozen=True)
class FilterParams:
    """Rejection threshold and retry budget for synthesized views."""

    eta: float = DEFAULT_ETA
    max_tries: int = DEFAULT_MAX_TRIES

    def __post_init__(self):
        # eta == 0 is allowed: it rejects everything, exercising the
        # keep-the-original fallback path.
        if self.eta < 0.0:
            raise ConfigError("eta must be >= 0")
        if self.max_tries < 1:
            raise ConfigError("max_tries must be >= 1")


def _gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    w = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return w / w.sum()


_WINDOW = _gaussian_window()


def _ssim_mean(a: np.ndarray, b: np.ndarray) -> float:
    """Mean SSIM between two (H, W, C) float arrays in [0, 255]."""
    c1 = (SSIM_K1 * DYNAMIC_RANGE) ** 2
    c2 = (SSIM_K2 * DYNAMIC_RANGE) ** 2
    fields = np.stack([a, b, a * a, b * b, a * b])
    smoothed = correlate1d(fields, _WINDOW, axis=1, mode="constant")
    smoothed = correlate1d(smoothed, _WINDOW, axis=2, mode="constant")
    margin = SSIM_WINDOW // 2
    smoothed = smoothed[:, margin:-margin, margin:-margin]
    mu_a, mu_b, sq_a, sq_b, ab = smoothed
    var_a = sq_a - mu_a * mu_a
    var_b = sq_b - mu_b * mu_b
    cov = ab - mu_a * mu_b
    ssim_map = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) / (
        (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    )
    return float(np.mean(ssim_map, dtype=np.float64))


def _downsample2(img: np.ndarray) -> np.ndarray:
    h = (img.shape[0] // 2) * 2
    w = (img.shape[1] // 2) * 2
    img = img[:h, :w]
    return 0.25 * (img[0::2, 0::2] + img[1::2, 0::2] + img[0::2, 1::2] + img[1::2, 1::2])


def perceptual_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Multi-scale structural dissimilarity in [0, 1]; symmetric, 0 iff equal input."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise GeometryError(f"image dimensions differ: {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a = a[:, :, None]
        b = b[:, :, None]
    if a.ndim != 3:
        raise GeometryError(f"expected (H, W, C) images, got shape {a.shape}")
    min_side = min(a.shape[0], a.shape[1])
    if min_side < SSIM_WINDOW * max(SCALES):
        raise GeometryError(
            f"images must be at least {SSIM_WINDOW * max(SCALES)} px on a side, got {min_side}"
        )
    fa = a.astype(np.float64)
    fb = b.astype(np.float64)
    total = 0.0
    scale = 1
    for target in SCALES:
        while scale < target:
            fa = _downsample2(fa)
            fb = _downsample2(fb)
            scale *= 2
        total += (1.0 - _ssim_mean(fa, fb)) / 2.0
    return total / len(SCALES)


def accept(source: np.ndarray, candidate: np.ndarray, params: FilterParams) -> bool:
    """True iff the candidate view is perceptually close enough to its source."""
    return perceptual_distance(source, candidate) < params.eta
