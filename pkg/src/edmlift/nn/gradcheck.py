"""Finite-difference verification of the analytic gradients.

Runs in float64 with dropout disabled and batch norm using batch statistics,
comparing backprop gradients against central differences of the L2 loss on a
random subset of coordinates per parameter tensor.
"""

from __future__ import annotations

import numpy as np

from .model import Model, ModelConfig


def _loss_and_grads(model: Model, x, target):
    model.zero_grads()
    out = model.forward(x, train=True)
    diff = out - target
    loss = float((diff**2).mean())
    model.backward(2.0 * diff / diff.size)
    return loss


def _loss_only(model: Model, x, target):
    out = model.forward(x, train=True)
    return float(((out - target) ** 2).mean())


def gradient_check(
    config: ModelConfig,
    sample,
    eps: float = 1e-5,
    seed: int = 0,
    coords_per_tensor: int = 200,
) -> float:
    """Max relative error between analytic and numeric gradients.

    `sample` is a batch of input EDMs, shape (B, N, N).
    """
    cfg = ModelConfig(arch=config.arch, n_joints=config.n_joints, dropout_rate=0.0)
    model = Model(cfg, seed=seed, dtype=np.float64)
    rng = np.random.default_rng(seed + 1)
    x = np.asarray(sample, dtype=np.float64)
    out_shape = model.forward(x, train=True).shape
    target = rng.standard_normal(out_shape)

    _loss_and_grads(model, x, target)
    analytic = {k: v.copy() for k, v in model.grads().items()}
    params = model.params()

    max_rel = 0.0
    for name, p in params.items():
        flat = p.reshape(-1)
        k = min(coords_per_tensor, flat.size)
        picks = rng.choice(flat.size, size=k, replace=False)
        for i in picks:
            orig = flat[i]
            flat[i] = orig + eps
            lp = _loss_only(model, x, target)
            flat[i] = orig - eps
            lm = _loss_only(model, x, target)
            flat[i] = orig
            numeric = (lp - lm) / (2 * eps)
            a = analytic[name].reshape(-1)[i]
            scale = abs(a) + abs(numeric)
            if scale < 1e-6:
                # both effectively zero, e.g. conv biases feeding batch norm,
                # whose true gradient vanishes (mean subtraction cancels
                # them); comparing roundoff to roundoff would read as 100%
                continue
            rel = abs(a - numeric) / scale
            max_rel = max(max_rel, rel)
    return max_rel
