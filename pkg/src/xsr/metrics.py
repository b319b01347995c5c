"""PSNR and SSIM as used for evaluation tables."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PSNR_CAP_DB = 100.0  # returned when MSE is exactly zero

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


@dataclass(frozen=True)
class MetricsSummary:
    psnr_mean: float
    ssim_mean: float
    fd_mean: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("summary needs at least one image")
        if self.ssim_mean > 1.0 + 1e-9:
            raise ValueError(f"ssim_mean {self.ssim_mean} exceeds 1")


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """10*log10(1/MSE) with peak 1.0, capped at 100 dB when MSE = 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return 10.0 * np.log10(1.0 / mse)


def _gaussian_window(n: int = _SSIM_WINDOW, sigma: float = _SSIM_SIGMA) -> np.ndarray:
    x = np.arange(n) - (n - 1) / 2.0
    g = np.exp(-(x ** 2) / (2.0 * sigma ** 2))
    return g / g.sum()


def _gfilter(img: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Separable Gaussian filter, valid positions only."""
    from numpy.lib.stride_tricks import sliding_window_view

    n = g.size
    rows = sliding_window_view(img, n, axis=1) @ g   # (h, w-n+1)
    return sliding_window_view(rows, n, axis=0) @ g  # (h-n+1, w-n+1)


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local SSIM over all valid 11x11 Gaussian windows (sigma 1.5,
    K1=0.01, K2=0.03, dynamic range 1.0)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if min(a.shape) < _SSIM_WINDOW:
        raise ValueError(f"image smaller than the {_SSIM_WINDOW}x{_SSIM_WINDOW} window")

    c1 = (_SSIM_K1 * 1.0) ** 2
    c2 = (_SSIM_K2 * 1.0) ** 2
    g = _gaussian_window()
    mu1 = _gfilter(a, g)
    mu2 = _gfilter(b, g)
    s11 = _gfilter(a * a, g) - mu1 * mu1
    s22 = _gfilter(b * b, g) - mu2 * mu2
    s12 = _gfilter(a * b, g) - mu1 * mu2
    num = (2.0 * mu1 * mu2 + c1) * (2.0 * s12 + c2)
    den = (mu1 ** 2 + mu2 ** 2 + c1) * (s11 + s22 + c2)
    return float(np.mean(num / den))
