"""Training and evaluation loops, checkpoint and history serialization."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..loss import LossWeights, fd_loss
from ..metrics import psnr, ssim
from .bicubic import bicubic_resample
from .network import LAYER_SHAPES, Weights, _forward_acts, backward, init_weights
from .optim import AdamState, TrainingDiverged, adam_step

CHECKPOINT_MAGIC = b"XSRW1"


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 4
    scale: int = 4
    epochs: int = 20
    seed: int = 0
    weights: LossWeights = field(default_factory=LossWeights)
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.scale != 4:
            raise ValueError("only the x4 upsampling factor is supported")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class History:
    """Per-step loss records and per-epoch validation metrics."""

    steps: list[tuple[int, float, float, float]] = field(default_factory=list)
    epochs: list[tuple[int, float, float, float]] = field(default_factory=list)

    def to_tsv(self) -> str:
        lines = [f"{s}\t{rec:.9g}\t{fd:.9g}\t{total:.9g}"
                 for s, rec, fd, total in self.steps]
        lines += [f"epoch\t{e}\t{p:.9g}\t{s:.9g}\t{f:.9g}"
                  for e, p, s, f in self.epochs]
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_tsv())


def _as_pair(item) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(item, "hr"):
        return np.asarray(item.hr), np.asarray(item.lr)
    hr, lr = item
    return np.asarray(hr), np.asarray(lr)


def split_validation(n: int) -> tuple[int, int]:
    """(n_train, n_val): the last tenth of the set, by index, is held out."""
    n_val = max(1, n // 10)
    return n - n_val, n_val


def train(dataset, cfg: TrainConfig, dtype=np.float32) -> tuple[Weights, History]:
    """Train on HR/LR pairs; returns the best-validation-PSNR checkpoint.

    The network input for each pair is the bicubic x4 upsample of its LR
    image.  Shuffling, initialization and the optimizer are all driven by
    cfg.seed, so identical configs reproduce identical histories byte for
    byte.
    """
    pairs = [_as_pair(p) for p in dataset]
    if len(pairs) < 2:
        raise ValueError("dataset must contain at least 2 pairs")
    torch.set_num_threads(1)  # keeps the conv primitive reduction order fixed

    n_train, n_val = split_validation(len(pairs))
    inputs, targets = [], []
    for hr, lr in pairs:
        h, w = hr.shape
        inputs.append(bicubic_resample(lr, h, w).astype(dtype))
        targets.append(hr.astype(dtype))
    x_train = np.stack(inputs[:n_train])
    y_train = np.stack(targets[:n_train])
    x_val = inputs[n_train:]
    y_val = targets[n_train:]

    w = init_weights(cfg.seed, dtype=dtype)
    state = AdamState.zeros_like(w)
    rng = np.random.default_rng(cfg.seed)
    history = History()
    best_w = w.copy()
    best_psnr = -np.inf
    step = 0

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n_train)
        for lo in range(0, n_train, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            grads, report = backward(w, x_train[idx], y_train[idx], cfg.weights)
            if not np.isfinite(report.total):
                raise TrainingDiverged(f"NaN loss at step {step}")
            w, state = adam_step(w, grads, state, cfg.learning_rate,
                                 cfg.betas, cfg.eps)
            history.steps.append((step, report.rec, report.fd, report.total))
            step += 1

        val = _validate(w, x_val, y_val)
        history.epochs.append((epoch, *val))
        if val[0] > best_psnr:
            best_psnr = val[0]
            best_w = w.copy()

    return best_w, history


def _validate(w: Weights, x_val, y_val) -> tuple[float, float, float]:
    ps, ss, fs = [], [], []
    for x, hr in zip(x_val, y_val):
        a1, a2, y = _forward_acts(w, x[None, None])
        sr = np.clip(y[0, 0].astype(np.float64), 0.0, 1.0)
        hr64 = hr.astype(np.float64)
        ps.append(psnr(sr, hr64))
        ss.append(ssim(sr, hr64))
        fs.append(fd_loss(sr, hr64))
    return float(np.mean(ps)), float(np.mean(ss)), float(np.mean(fs))


def evaluate(w: Weights | None, dataset) -> dict:
    """Metrics for the model (when given) and the bicubic baseline.

    For each pair: SR = clamp(forward(w, bicubic x4 upsample of LR)).
    Returns {"model": MetricsSummary | None, "bicubic": MetricsSummary}.
    """
    from ..metrics import MetricsSummary

    pairs = [_as_pair(p) for p in dataset]
    if not pairs:
        raise ValueError("test set must not be empty")
    mp, ms_, mf = [], [], []
    bp, bs, bf = [], [], []
    for hr, lr in pairs:
        hr = hr.astype(np.float64)
        h, wdt = hr.shape
        up = bicubic_resample(lr, h, wdt)
        bp.append(psnr(up, hr))
        bs.append(ssim(up, hr))
        bf.append(fd_loss(up, hr))
        if w is not None:
            a1, a2, y = _forward_acts(w, up.astype(w.dtype)[None, None])
            sr = np.clip(y[0, 0].astype(np.float64), 0.0, 1.0)
            mp.append(psnr(sr, hr))
            ms_.append(ssim(sr, hr))
            mf.append(fd_loss(sr, hr))
    out = {"bicubic": MetricsSummary(float(np.mean(bp)), float(np.mean(bs)),
                                     float(np.mean(bf)), len(pairs))}
    out["model"] = (MetricsSummary(float(np.mean(mp)), float(np.mean(ms_)),
                                   float(np.mean(mf)), len(pairs))
                    if w is not None else None)
    return out


def save_weights(path, w: Weights) -> None:
    """Binary checkpoint: magic, then per layer kernel dims (4 x u32 LE),
    kernel float32 values, bias length (u32) and bias float32 values."""
    parts = [CHECKPOINT_MAGIC]
    arrs = w.arrays()
    for i in range(0, len(arrs), 2):
        k, b = arrs[i], arrs[i + 1]
        parts.append(struct.pack("<4I", *k.shape))
        parts.append(k.astype("<f4").tobytes())
        parts.append(struct.pack("<I", b.size))
        parts.append(b.astype("<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_weights(path) -> Weights:
    data = Path(path).read_bytes()
    if not data.startswith(CHECKPOINT_MAGIC):
        raise ValueError(f"{path}: not a checkpoint (bad magic)")
    pos = len(CHECKPOINT_MAGIC)
    arrs = []
    for kshape, bshape in LAYER_SHAPES:
        dims = struct.unpack_from("<4I", data, pos)
        pos += 16
        if dims != kshape:
            raise ValueError(f"{path}: kernel dims {dims} do not match {kshape}")
        n = int(np.prod(dims))
        k = np.frombuffer(data, dtype="<f4", count=n, offset=pos).reshape(dims)
        pos += 4 * n
        (blen,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if (blen,) != bshape:
            raise ValueError(f"{path}: bias length {blen} does not match {bshape}")
        b = np.frombuffer(data, dtype="<f4", count=blen, offset=pos)
        pos += 4 * blen
        arrs += [k.astype(np.float32), b.astype(np.float32)]
    if pos != len(data):
        raise ValueError(f"{path}: trailing bytes in checkpoint")
    return Weights(*arrs)
