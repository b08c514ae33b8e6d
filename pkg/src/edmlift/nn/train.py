"""Training loop: shuffled mini-batches, mean-squared-entry L2 loss, Adam
with a two-stage learning-rate schedule, optional random two-joint
occlusion augmentation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..edm import pack_edm
from ..errors import InvalidInputError, ShapeError
from .adam import AdamState, adam_step
from .model import Model, ModelConfig

# Network regresses 3D EDMs in meters; dataset targets are in millimeters.
DEFAULT_TARGET_SCALE = 1e-3


@dataclass
class TrainConfig:
    batch_size: int = 200
    epochs: int = 500
    lr_initial: float = 0.001
    lr_reduced: float = 0.0001
    lr_switch_epoch: int | None = None  # default: half of epochs
    warmup_epochs: int = 0  # epochs at lr_reduced before lr_initial kicks in
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    occlusion_augment: bool = False
    noise_sigma: float = 0.0  # applied upstream, recorded here for provenance
    target_scale: float = DEFAULT_TARGET_SCALE

    def switch_epoch(self) -> int:
        sw = self.epochs // 2 if self.lr_switch_epoch is None else self.lr_switch_epoch
        if sw >= self.epochs and self.epochs > 1:
            raise InvalidInputError("lr_switch_epoch must be < epochs")
        return sw

    def lr_at(self, epoch: int) -> float:
        # a gentle start keeps the final ReLU from dying under early Adam
        # steps; sign-normalized steps at full rate can push the single
        # output channel entirely negative, where no gradient can reach it
        if epoch < self.warmup_epochs:
            return self.lr_reduced
        return self.lr_initial if epoch < self.switch_epoch() else self.lr_reduced


@dataclass
class TrainResult:
    model: Model
    loss_history: list[float] = field(default_factory=list)


def _occlude_batch(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Zero the rows/columns of 2 distinct random joints, per sample."""
    out = x.copy()
    n = out.shape[-1]
    for i in range(out.shape[0]):
        a, b = rng.choice(n, size=2, replace=False)
        out[i, ..., a, :] = 0.0
        out[i, ..., :, a] = 0.0
        out[i, ..., b, :] = 0.0
        out[i, ..., :, b] = 0.0
    return out


def train(
    config: ModelConfig,
    tcfg: TrainConfig,
    inputs_2d: np.ndarray,
    targets_3d_mm: np.ndarray,
    callback=None,
) -> TrainResult:
    """inputs_2d: (D, N, N) normalized 2D EDMs; targets_3d_mm: (D, N, N) 3D
    EDMs in millimeters.  Returns the trained model plus per-epoch mean
    loss (recorded, not guaranteed monotone)."""
    x = np.asarray(inputs_2d, dtype=np.float32)
    y = np.asarray(targets_3d_mm, dtype=np.float32)
    n = config.n_joints
    if x.ndim != 3 or x.shape[1:] != (n, n) or y.shape != x.shape:
        raise ShapeError(f"expected (D, {n}, {n}) inputs and targets, got {x.shape}, {y.shape}")
    if x.shape[0] == 0:
        raise InvalidInputError("empty dataset")

    model = Model(config, seed=tcfg.seed)
    model.target_scale = tcfg.target_scale
    y = y * np.float32(tcfg.target_scale)
    iu = np.triu_indices(n, k=1)

    state = AdamState(model.params(), beta1=tcfg.beta1, beta2=tcfg.beta2, eps=tcfg.eps)
    rng = np.random.default_rng(tcfg.seed)
    d = x.shape[0]
    history: list[float] = []
    for epoch in range(tcfg.epochs):
        lr = tcfg.lr_at(epoch)
        order = rng.permutation(d)
        epoch_loss = 0.0
        for start in range(0, d, tcfg.batch_size):
            idx = order[start : start + tcfg.batch_size]
            xb = x[idx]
            if tcfg.occlusion_augment:
                # occlude half the batch so clean inputs stay in distribution
                pick = rng.random(len(idx)) < 0.5
                if pick.any():
                    xb[pick] = _occlude_batch(xb[pick], rng)
            if config.arch == "fconn":
                xin = xb[:, iu[0], iu[1]]
                yb = y[idx][:, iu[0], iu[1]]
            else:
                xin = xb[:, None]
                yb = y[idx][:, None]
            model.zero_grads()
            out = model.forward(xin, train=True, rng=rng)
            diff = out - yb
            loss = float((diff.astype(np.float64) ** 2).mean())
            model.backward(2.0 * diff / diff.size)
            adam_step(state, model.params(), model.grads(), lr)
            epoch_loss += loss * len(idx)
        history.append(epoch_loss / d)
        if callback is not None:
            callback(epoch, history[-1])
    return TrainResult(model=model, loss_history=history)
