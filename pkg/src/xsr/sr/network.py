"""Compact pre-upsampling SR backbone (9-5-5 conv stack) with hand-written
backpropagation.

torch.nn.functional supplies the convolution primitive; the gradient
composition itself (loss cotangents, ReLU masks, chain rule) is explicit
here and is validated against finite differences in the test suite.
Arrays are numpy end to end; float32 for training, float64 for gradient
checks.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np
import torch
import torch.nn.functional as F

from ..loss import LossReport, LossWeights, fd_loss, fd_loss_grad, rec_loss

torch.set_grad_enabled(False)

# layer geometry is fixed: 9x9 1->64, 5x5 64->32, 5x5 32->1, all same-padded
LAYER_SHAPES = (
    ((64, 1, 9, 9), (64,)),
    ((32, 64, 5, 5), (32,)),
    ((1, 32, 5, 5), (1,)),
)


@dataclass
class Weights:
    """Per-layer kernels (out, in, kh, kw) and biases."""

    k1: np.ndarray
    b1: np.ndarray
    k2: np.ndarray
    b2: np.ndarray
    k3: np.ndarray
    b3: np.ndarray

    def arrays(self) -> list[np.ndarray]:
        return [getattr(self, f.name) for f in fields(self)]

    def copy(self) -> "Weights":
        return Weights(*(a.copy() for a in self.arrays()))

    @property
    def dtype(self):
        return self.k1.dtype

    def astype(self, dtype) -> "Weights":
        return Weights(*(a.astype(dtype) for a in self.arrays()))

    def all_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.arrays())


def init_weights(seed: int, dtype=np.float32) -> Weights:
    """He-normal kernels (std = sqrt(2/fan_in)), zero biases."""
    rng = np.random.default_rng(seed)
    arrs = []
    for kshape, bshape in LAYER_SHAPES:
        fan_in = kshape[1] * kshape[2] * kshape[3]
        arrs.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=kshape).astype(dtype))
        arrs.append(np.zeros(bshape, dtype=dtype))
    return Weights(*arrs)


def identity_weights(dtype=np.float32) -> Weights:
    """Pass-through configuration: a single center-tap channel path, so the
    network reproduces any non-negative input exactly."""
    arrs = []
    for kshape, bshape in LAYER_SHAPES:
        k = np.zeros(kshape, dtype=dtype)
        k[0, 0, kshape[2] // 2, kshape[3] // 2] = 1.0
        arrs.append(k)
        arrs.append(np.zeros(bshape, dtype=dtype))
    return Weights(*arrs)


def _t(a: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(a))


def _conv(x: np.ndarray, k: np.ndarray, b: np.ndarray) -> np.ndarray:
    pad = k.shape[2] // 2
    return F.conv2d(_t(x), _t(k), _t(b), padding=pad).numpy()


def _conv_dx(g: np.ndarray, k: np.ndarray) -> np.ndarray:
    pad = k.shape[2] // 2
    return F.conv_transpose2d(_t(g), _t(k), padding=pad).numpy()


def _conv_dw(x: np.ndarray, g: np.ndarray, kshape) -> np.ndarray:
    pad = kshape[2] // 2
    return torch.nn.grad.conv2d_weight(_t(x), kshape, _t(g), padding=pad).numpy()


def _forward_acts(w: Weights, x: np.ndarray):
    """x is (B, 1, H, W); returns post-ReLU activations and the raw output."""
    a1 = np.maximum(_conv(x, w.k1, w.b1), 0.0)
    a2 = np.maximum(_conv(a1, w.k2, w.b2), 0.0)
    y = _conv(a2, w.k3, w.b3)
    return a1, a2, y


def forward(w: Weights, img: np.ndarray) -> np.ndarray:
    """Run one image through the network.  Output is NOT clamped; clamp to
    [0,1] at evaluation/export time."""
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError(f"expected a single-channel 2-d image, got shape {img.shape}")
    x = img.astype(w.dtype, copy=False)[None, None]
    _, _, y = _forward_acts(w, x)
    return y[0, 0]


def backward(w: Weights, inputs: np.ndarray, targets: np.ndarray,
             weights: LossWeights) -> tuple[Weights, LossReport]:
    """Gradients of the mean-over-batch composite loss w.r.t. every parameter.

    ``inputs``/``targets`` are (B, H, W) stacks; the pixel-space cotangent is
    lambda_rec * d(rec)/d(sr) + lambda_fd * fd_loss_grad, backpropagated
    through the conv/ReLU stack.
    """
    inputs = np.asarray(inputs)
    targets = np.asarray(targets)
    if inputs.shape != targets.shape or inputs.ndim != 3:
        raise ValueError(f"batch shape mismatch: {inputs.shape} vs {targets.shape}")
    bsz, h, ww = inputs.shape
    dtype = w.dtype
    x = inputs.astype(dtype, copy=False)[:, None]
    a1, a2, y = _forward_acts(w, x)

    recs, fds = [], []
    cot = np.empty_like(y)
    for i in range(bsz):
        sr = y[i, 0]
        hr = targets[i].astype(dtype, copy=False)
        recs.append(rec_loss(sr, hr))
        fds.append(fd_loss(sr, hr))
        g = weights.lambda_rec * np.sign(sr - hr) / (h * ww)
        if weights.lambda_fd != 0.0:
            g = g + weights.lambda_fd * fd_loss_grad(sr, hr)
        cot[i, 0] = g / bsz

    g3 = cot
    dk3 = _conv_dw(a2, g3, w.k3.shape)
    db3 = g3.sum(axis=(0, 2, 3))
    g2 = _conv_dx(g3, w.k3) * (a2 > 0)
    dk2 = _conv_dw(a1, g2, w.k2.shape)
    db2 = g2.sum(axis=(0, 2, 3))
    g1 = _conv_dx(g2, w.k2) * (a1 > 0)
    dk1 = _conv_dw(x, g1, w.k1.shape)
    db1 = g1.sum(axis=(0, 2, 3))

    rec = float(np.mean(recs))
    fd = float(np.mean(fds))
    report = LossReport(rec=rec, fd=fd,
                        total=weights.lambda_rec * rec + weights.lambda_fd * fd)
    grads = Weights(dk1.astype(dtype), db1.astype(dtype),
                    dk2.astype(dtype), db2.astype(dtype),
                    dk3.astype(dtype), db3.astype(dtype))
    return grads, report
