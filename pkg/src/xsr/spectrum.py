"""Real-to-complex 2D DFT, its exact adjoint, and magnitude-spectrum
visualization.

The forward transform is unnormalized: coefficient (ky, kx) equals
sum_{y,x} img[y,x] * exp(-2*pi*i*(ky*y/h + kx*x/w)), stored for columns
0..floor(w/2) only (conjugate symmetry carries the rest).
"""

from __future__ import annotations

import numpy as np


def rfft2(img: np.ndarray) -> np.ndarray:
    """Half-spectrum of a real image: complex array of shape (h, w//2 + 1)."""
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError(f"expected a single-channel 2-d image, got shape {img.shape}")
    h, w = img.shape
    if h < 2 or w < 2:
        raise ValueError(f"image must be at least 2x2, got {img.shape}")
    return np.fft.rfft2(img)


def irfft2(spec: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Exact inverse of :func:`rfft2` (includes the 1/(h*w) factor)."""
    return np.fft.irfft2(spec, s=shape)


def adjoint_rfft2(cotangent: np.ndarray, h: int, w: int) -> np.ndarray:
    """Adjoint of rfft2 as a linear map from h*w reals to stacked
    real/imaginary parts of the half-spectrum.

    Satisfies <rfft2(x), y> = <x, adjoint_rfft2(y)> for all real x and
    complex y, where the left inner product is sum(Re*Re + Im*Im).
    """
    cot = np.asarray(cotangent)
    wh = w // 2 + 1
    if cot.shape != (h, wh):
        raise ValueError(f"cotangent shape {cot.shape} does not match ({h}, {wh})")
    full = np.zeros((h, w), dtype=np.result_type(cot.dtype, np.complex64))
    full[:, :wh] = cot
    # adjoint(Y)[y,x] = Re sum_{k,l stored} Y[k,l] e^{+2pi i (ky/h + lx/w)}
    return np.fft.ifft2(full).real * (h * w)


def full_spectrum(half: np.ndarray, w: int) -> np.ndarray:
    """Reconstruct the full h x w spectrum from the half-spectrum by
    conjugate symmetry: S[k, l] = conj(S[(h-k) % h, w-l]) for l > w//2."""
    h, wh = half.shape
    if wh != w // 2 + 1:
        raise ValueError(f"half-spectrum width {wh} inconsistent with w={w}")
    full = np.empty((h, w), dtype=half.dtype)
    full[:, :wh] = half
    rows = (h - np.arange(h)) % h
    cols = w - np.arange(wh, w)
    full[:, wh:] = np.conj(half[np.ix_(rows, cols)])
    return full


def log_magnitude(img: np.ndarray) -> np.ndarray:
    """Shifted log-magnitude spectrum image, min-max normalized to [0,1].

    DC lands at (h//2, w//2).  A constant input produces a single bright
    center pixel on a black field.
    """
    img = np.asarray(img)
    h, w = img.shape
    full = full_spectrum(rfft2(img), w)
    mag = np.log1p(np.abs(np.fft.fftshift(full)))
    lo = mag.min()
    hi = mag.max()
    if hi <= lo:
        return np.zeros_like(mag)
    return (mag - lo) / (hi - lo)
