"""PSNR, SSIM and bit error rate."""

from __future__ import annotations

import math

import numpy as np

PEAK = 255.0
SSIM_WINDOW = 8
C1 = (0.01 * PEAK) ** 2
C2 = (0.03 * PEAK) ** 2


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB with peak 255; ``inf`` for identical inputs."""
    a, b = _pair(a, b)
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(PEAK**2 / mse)


def _box_mean(x: np.ndarray, k: int = SSIM_WINDOW) -> np.ndarray:
    # valid-mode k x k means via an integral image
    s = np.zeros((x.shape[0] + 1, x.shape[1] + 1))
    s[1:, 1:] = x.cumsum(0).cumsum(1)
    return (s[k:, k:] - s[:-k, k:] - s[k:, :-k] + s[:-k, :-k]) / (k * k)


def ssim(a, b) -> float:
    """Mean SSIM over all 8x8 windows (stride 1, uniform weights).

    Window statistics use population variance/covariance and the usual
    stabilisers ``C1 = (0.01*255)**2``, ``C2 = (0.03*255)**2``.
    """
    a, b = _pair(a, b)
    if a.ndim != 2 or min(a.shape) < SSIM_WINDOW:
        raise ValueError(f"image too small for SSIM: {a.shape}")
    mu_a = _box_mean(a)
    mu_b = _box_mean(b)
    var_a = _box_mean(a * a) - mu_a**2
    var_b = _box_mean(b * b) - mu_b**2
    cov = _box_mean(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + C1) * (2 * cov + C2)
    den = (mu_a**2 + mu_b**2 + C1) * (var_a + var_b + C2)
    return float(np.mean(num / den))


def ber(sent, received) -> float:
    """Fraction of positions where two bit sequences disagree."""
    s = np.asarray(sent, dtype=np.uint8).ravel()
    r = np.asarray(received, dtype=np.uint8).ravel()
    if s.size != r.size:
        raise ValueError(f"length mismatch: {s.size} vs {r.size}")
    if s.size == 0:
        raise ValueError("empty bit sequence")
    return float(np.count_nonzero(s != r)) / s.size
