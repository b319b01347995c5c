"""Bias-corrected Adam over the network parameter tree."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Weights


class TrainingDiverged(RuntimeError):
    """Raised when a NaN shows up in gradients or parameters."""


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, w: Weights) -> "AdamState":
        return cls(m=[np.zeros_like(a) for a in w.arrays()],
                   v=[np.zeros_like(a) for a in w.arrays()],
                   t=0)


def adam_step(w: Weights, grads: Weights, state: AdamState, lr: float,
              betas: tuple[float, float] = (0.9, 0.999),
              eps: float = 1e-8) -> tuple[Weights, AdamState]:
    """One Adam update; returns new weights and advanced state."""
    b1, b2 = betas
    t = state.t + 1
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(w.arrays(), grads.arrays(), state.m, state.v):
        if not np.isfinite(g).all():
            raise TrainingDiverged("NaN/Inf in gradients")
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        new_params.append((p - lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.dtype))
        new_m.append(m.astype(p.dtype))
        new_v.append(v.astype(p.dtype))
    return Weights(*new_params), AdamState(m=new_m, v=new_v, t=t)
