"""Training losses: reconstruction L1, frequency-domain L1 over the
half-spectrum, the weighted composite, and the analytic gradient of the
frequency term."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectrum import adjoint_rfft2, rfft2


@dataclass(frozen=True)
class LossWeights:
    """Coefficients of the composite loss.  Adversarial and perceptual
    slots are reserved and must stay zero in this artifact."""

    lambda_rec: float = 1.0
    lambda_fd: float = 0.01
    lambda_adv: float = 0.0
    lambda_per: float = 0.0

    def __post_init__(self):
        if min(self.lambda_rec, self.lambda_fd, self.lambda_adv, self.lambda_per) < 0:
            raise ValueError("loss weights must be >= 0")
        if self.lambda_adv != 0.0 or self.lambda_per != 0.0:
            raise ValueError("adversarial/perceptual terms are out of scope; weights must be 0")


@dataclass(frozen=True)
class LossReport:
    rec: float
    fd: float
    total: float


def _check_pair(sr: np.ndarray, hr: np.ndarray) -> None:
    if sr.shape != hr.shape:
        raise ValueError(f"shape mismatch: sr {sr.shape} vs hr {hr.shape}")
    if sr.ndim != 2:
        raise ValueError(f"expected single-channel 2-d images, got shape {sr.shape}")


def rec_loss(sr: np.ndarray, hr: np.ndarray) -> float:
    """Mean absolute pixel difference."""
    sr = np.asarray(sr)
    hr = np.asarray(hr)
    _check_pair(sr, hr)
    return float(np.mean(np.abs(sr - hr)))


def fd_loss(sr: np.ndarray, hr: np.ndarray) -> float:
    """L1 between half-spectra, taken elementwise over real and imaginary
    parts, normalized by the full image element count C*H*W (C=1)."""
    sr = np.asarray(sr)
    hr = np.asarray(hr)
    _check_pair(sr, hr)
    d = rfft2(hr) - rfft2(sr)
    h, w = sr.shape
    return float((np.abs(d.real) + np.abs(d.imag)).sum() / (h * w))


def _sign(x: np.ndarray, scale: float) -> np.ndarray:
    """sign() with the 0 convention extended to floating-point dust: values
    below 1e-12 of the spectrum scale are transform rounding noise, not real
    sign information, and must not leak +-1 into the gradient."""
    s = np.sign(x)
    s[np.abs(x) <= 1e-12 * scale] = 0.0
    return s


def fd_loss_grad(sr: np.ndarray, hr: np.ndarray) -> np.ndarray:
    """Gradient of :func:`fd_loss` with respect to the sr pixels.

    The subgradient convention sign(0) = 0 makes the gradient zero for
    identical images.  Matches central finite differences wherever no
    spectral difference sits within the differencing step of zero.
    """
    sr = np.asarray(sr)
    hr = np.asarray(hr)
    _check_pair(sr, hr)
    h, w = sr.shape
    d = rfft2(hr) - rfft2(sr)
    scale = max(np.max(np.abs(d.real)), np.max(np.abs(d.imag)), np.finfo(np.float64).tiny)
    cot = -(_sign(d.real, scale) + 1j * _sign(d.imag, scale)) / (h * w)
    return adjoint_rfft2(cot, h, w)


def total_loss(sr: np.ndarray, hr: np.ndarray, weights: LossWeights) -> LossReport:
    rec = rec_loss(sr, hr)
    fd = fd_loss(sr, hr)
    return LossReport(rec=rec, fd=fd,
                      total=weights.lambda_rec * rec + weights.lambda_fd * fd)
