"""Adam optimizer with bias correction, plus gradient-clipping helpers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .autodiff import ShapeError, Tensor


@dataclass
class AdamState:
    """Per-parameter moment accumulators and the shared step counter."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def init(self, params: list[Tensor]) -> "AdamState":
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]
        self.t = 0
        return self


def adam_step(params: list[Tensor], grads: list[np.ndarray], state: AdamState,
              lr: float | None = None) -> None:
    """One in-place Adam update. ``lr`` overrides state.lr (warmup schedules)."""
    if not state.m:
        state.init(params)
    if len(grads) != len(params):
        raise ShapeError(f"adam: {len(grads)} gradients for {len(params)} parameters")
    for p, g in zip(params, grads):
        if g.shape != p.data.shape:
            raise ShapeError(f"adam: gradient shape {g.shape} vs parameter {p.data.shape}")
    state.t += 1
    dt = params[0].data.dtype.type
    bc1 = dt(1.0 - state.beta1 ** state.t)
    bc2 = dt(1.0 - state.beta2 ** state.t)
    step_lr = dt(state.lr if lr is None else lr)
    for p, g, m, v in zip(params, grads, state.m, state.v):
        K.adam_update(p.data.ravel(), np.ascontiguousarray(g).ravel(),
                      m.ravel(), v.ravel(),
                      step_lr, dt(state.beta1), dt(state.beta2), dt(state.eps),
                      bc1, bc2)


def clip_global_norm(grads: list[np.ndarray], max_norm: float) -> float:
    """Scale all gradients in place so their joint L2 norm is <= max_norm.
    Returns the pre-clip norm."""
    total = 0.0
    for g in grads:
        total += float(np.dot(g.ravel(), g.ravel()))
    norm = float(np.sqrt(total))
    if norm > max_norm and norm > 0:
        scale = max_norm / norm
        for g in grads:
            g *= scale
    return norm


def warmup_lr(base_lr: float, step: int, warmup_steps: int) -> float:
    """Linear warmup from 0 over the first warmup_steps, then constant."""
    if warmup_steps <= 0 or step >= warmup_steps:
        return base_lr
    return base_lr * (step + 1) / warmup_steps


def cosine_lr(base_lr: float, step: int, total_steps: int, warmup_steps: int,
              floor: float = 0.1) -> float:
    """Linear warmup, then cosine decay to floor*base_lr at total_steps."""
    if step < warmup_steps:
        return warmup_lr(base_lr, step, warmup_steps)
    span = max(total_steps - warmup_steps, 1)
    progress = min((step - warmup_steps) / span, 1.0)
    return base_lr * (floor + (1.0 - floor) * 0.5 * (1.0 + np.cos(np.pi * progress)))
