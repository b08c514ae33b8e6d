"""The two EDM regressor architectures and parameter bookkeeping.

fconn: three fully connected layers (128-128-91 for N=14) with ReLU and
dropout, operating on the packed upper triangle of the input EDM.

fconv: two contractive conv blocks (7x7, 64 features, batch norm, ReLU,
2x2 ceil max-pool, dropout) followed by two expansive blocks (nearest x2
upsample + 7x7 conv), a 1x1 contraction to a single channel, matrix
symmetrization and a final ReLU.  Output is symmetric and nonnegative by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..edm import DistanceMatrix, as_matrix, pack_edm
from ..errors import InvalidInputError, NumericError, ShapeError
from .layers import (
    BatchNorm2d,
    Conv2d,
    Dropout,
    Layer,
    Linear,
    MatrixSymmetrize,
    MaxPool2x2,
    ReLU,
    UpsampleNearest2x,
)

ARCHS = ("fconn", "fconv")


@dataclass(frozen=True)
class ModelConfig:
    arch: str = "fconn"
    n_joints: int = 14
    dropout_rate: float = 0.5

    def __post_init__(self):
        if self.arch not in ARCHS:
            raise InvalidInputError(f"unknown arch {self.arch!r}; expected one of {ARCHS}")
        if self.n_joints < 2:
            raise InvalidInputError("n_joints must be >= 2")

    @property
    def n_pairs(self) -> int:
        return self.n_joints * (self.n_joints - 1) // 2


def _fconn_layers(cfg: ModelConfig) -> list[tuple[str, Layer]]:
    p = cfg.n_pairs
    d = cfg.dropout_rate
    return [
        ("fc1", Linear(p, 128)),
        ("relu1", ReLU()),
        ("drop1", Dropout(d)),
        ("fc2", Linear(128, 128)),
        ("relu2", ReLU()),
        ("drop2", Dropout(d)),
        # positive bias keeps the output ReLU alive at the start of training
        ("fc3", Linear(128, p, bias_init=0.5)),
        ("relu3", ReLU()),
    ]


def _fconv_layers(cfg: ModelConfig) -> list[tuple[str, Layer]]:
    n = cfg.n_joints
    d = cfg.dropout_rate
    mid = (n + 1) // 2  # 14 -> 7 -> 4 with ceiling pooling
    return [
        ("conv1", Conv2d(1, 64, 7, pad=3)),
        ("bn1", BatchNorm2d(64)),
        ("relu1", ReLU()),
        ("pool1", MaxPool2x2()),
        ("drop1", Dropout(d)),
        ("conv2", Conv2d(64, 64, 7, pad=3)),
        ("bn2", BatchNorm2d(64)),
        ("relu2", ReLU()),
        ("pool2", MaxPool2x2()),
        ("drop2", Dropout(d)),
        ("up1", UpsampleNearest2x(out_size=mid)),
        ("conv3", Conv2d(64, 64, 7, pad=3)),
        ("relu3", ReLU()),
        ("drop3", Dropout(d)),
        ("up2", UpsampleNearest2x(out_size=n)),
        ("conv4", Conv2d(64, 64, 7, pad=3)),
        ("relu4", ReLU()),
        # positive bias keeps the final ReLU in its linear region at the
        # start of training; a dead output unit cannot recover
        ("conv5", Conv2d(64, 1, 1, pad=0, bias_init=0.5)),
        ("ms", MatrixSymmetrize()),
        ("relu5", ReLU()),
    ]


class Model:
    """A named stack of layers plus the scale tying network output units to
    millimeters (predicted mm = raw output / target_scale)."""

    def __init__(self, config: ModelConfig, seed: int = 0, dtype=np.float32):
        self.config = config
        self.dtype = np.dtype(dtype)
        self.layers = _fconn_layers(config) if config.arch == "fconn" else _fconv_layers(config)
        self.target_scale = 1.0
        rng = np.random.default_rng(seed)
        for _, layer in self.layers:
            layer.init(rng, self.dtype)
            layer.zero_grads()

    # --- parameter access -------------------------------------------------
    def params(self) -> dict[str, np.ndarray]:
        return {f"{n}.{k}": v for n, l in self.layers for k, v in l.params.items()}

    def grads(self) -> dict[str, np.ndarray]:
        return {f"{n}.{k}": v for n, l in self.layers for k, v in l.grads.items()}

    def buffers(self) -> dict[str, np.ndarray]:
        return {f"{n}.{k}": v for n, l in self.layers for k, v in l.buffers.items()}

    def zero_grads(self):
        for _, layer in self.layers:
            layer.zero_grads()

    def n_params(self) -> int:
        return sum(v.size for v in self.params().values())

    # --- forward / backward ----------------------------------------------
    def _prepare_input(self, x) -> np.ndarray:
        n = self.config.n_joints
        if isinstance(x, DistanceMatrix):
            x = x.values
        x = np.asarray(x)
        if self.config.arch == "fconn":
            if x.ndim == 2 and x.shape == (n, n):
                x = pack_edm(x)[None, :]
            elif x.ndim == 1 and x.size == self.config.n_pairs:
                x = x[None, :]
            elif x.ndim == 3 and x.shape[1:] == (n, n):
                x = np.stack([pack_edm(m) for m in x])
            elif not (x.ndim == 2 and x.shape[1] == self.config.n_pairs):
                raise ShapeError(f"bad fconn input shape {x.shape}")
        else:
            if x.ndim == 2 and x.shape == (n, n):
                x = x[None, None]
            elif x.ndim == 3 and x.shape[1:] == (n, n):
                x = x[:, None]
            elif not (x.ndim == 4 and x.shape[1:] == (1, n, n)):
                raise ShapeError(f"bad fconv input shape {x.shape}")
        return np.ascontiguousarray(x, dtype=self.dtype)

    def forward(self, x, train: bool = False, rng=None) -> np.ndarray:
        """Batched forward pass.  Output is (B, 91) for fconn and
        (B, 1, N, N) for fconv, in network units (mm * target_scale)."""
        h = self._prepare_input(x)
        for name, layer in self.layers:
            h = layer.forward(h, train=train, rng=rng)
            if not np.isfinite(h).all():
                raise NumericError(f"non-finite activation after layer {name!r}")
        return h

    def backward(self, dout) -> np.ndarray:
        g = np.ascontiguousarray(dout, dtype=self.dtype)
        for _, layer in reversed(self.layers):
            g = layer.backward(g)
        return g

    def predict_edm(self, edm2d) -> DistanceMatrix:
        """Single-sample inference: normalized 2D EDM in, 3D EDM in mm out."""
        from ..edm import unpack_edm

        out = self.forward(as_matrix(edm2d), train=False)
        mm = out[0] / self.target_scale
        if self.config.arch == "fconn":
            return unpack_edm(np.asarray(mm, dtype=np.float64), self.config.n_joints, units="mm")
        return DistanceMatrix(np.asarray(mm[0], dtype=np.float64), units="mm")


def init_model(config: ModelConfig, seed: int) -> dict[str, np.ndarray]:
    """He-initialized parameter set (weights ~ N(0, 2/fan_in), biases zero)."""
    return Model(config, seed=seed).params()


def count_params(config: ModelConfig) -> int:
    """Trainable parameter count; running statistics excluded."""
    return Model(config, seed=0).n_params()
