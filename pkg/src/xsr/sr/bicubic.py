"""Separable cubic-convolution resampling (Keys kernel, a = -0.5) with
antialiasing on downsample, matching the PIL-style half-pixel mapping."""

from __future__ import annotations

import math

import numpy as np


def cubic_kernel(t):
    """Keys cubic with a = -0.5; support (-2, 2)."""
    a = -0.5
    t = np.abs(np.asarray(t, dtype=np.float64))
    out = np.zeros_like(t)
    near = t <= 1.0
    far = (t > 1.0) & (t < 2.0)
    out[near] = ((a + 2.0) * t[near] - (a + 3.0)) * t[near] ** 2 + 1.0
    out[far] = (((t[far] - 5.0) * t[far] + 8.0) * t[far] - 4.0) * a
    return out


def resample_weights(n_in: int, n_out: int) -> np.ndarray:
    """Dense (n_out, n_in) weight matrix for one axis.

    Output sample j is centered at (j + 0.5) * n_in/n_out - 0.5 in input
    coordinates.  When downsampling the kernel support is stretched by the
    scale factor (antialiasing).  Edge taps clamp to the border pixel and
    each row is normalized to sum to one, so constants are preserved exactly.
    """
    scale = n_in / n_out
    support = max(scale, 1.0)
    w = np.zeros((n_out, n_in))
    for j in range(n_out):
        center = (j + 0.5) * scale - 0.5
        lo = int(math.floor(center - 2.0 * support)) + 1
        hi = int(math.floor(center + 2.0 * support))
        taps = np.arange(lo, hi + 1)
        vals = cubic_kernel((taps - center) / support)
        idx = np.clip(taps, 0, n_in - 1)
        np.add.at(w[j], idx, vals)
        w[j] /= w[j].sum()
    return w


def bicubic_resample(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resample to (out_h, out_w); output is clamped to [0,1]."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-d image, got shape {img.shape}")
    if out_h < 1 or out_w < 1:
        raise ValueError("output dims must be >= 1")
    h, w = img.shape
    rows = resample_weights(h, out_h)
    cols = resample_weights(w, out_w)
    return np.clip(rows @ img @ cols.T, 0.0, 1.0)
