"""Minimal layer stack with explicit forward/backward passes.

Every layer stores its trainable tensors in `params`, the matching gradients
in `grads` (accumulated by backward) and non-trainable state in `buffers`.
Arrays are float32 by default; float64 is used for gradient checking.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericError, ShapeError


class Layer:
    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}

    def forward(self, x, train=False, rng=None):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def init(self, rng, dtype):
        """Fill params; default is no parameters."""

    def zero_grads(self):
        for k, v in self.params.items():
            self.grads[k] = np.zeros_like(v)


class Linear(Layer):
    def __init__(self, n_in, n_out, bias_init=0.0):
        super().__init__()
        self.n_in, self.n_out = n_in, n_out
        self.bias_init = bias_init

    def init(self, rng, dtype):
        std = np.sqrt(2.0 / self.n_in)
        self.params["w"] = (rng.standard_normal((self.n_out, self.n_in)) * std).astype(dtype)
        self.params["b"] = np.full(self.n_out, self.bias_init, dtype=dtype)

    def forward(self, x, train=False, rng=None):
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ShapeError(f"Linear expects (B, {self.n_in}), got {x.shape}")
        self._x = x
        return x @ self.params["w"].T + self.params["b"]

    def backward(self, dout):
        self.grads["w"] += dout.T @ self._x
        self.grads["b"] += dout.sum(0)
        return dout @ self.params["w"]


class ReLU(Layer):
    def forward(self, x, train=False, rng=None):
        self._mask = x > 0
        return x * self._mask

    def backward(self, dout):
        return dout * self._mask


class Dropout(Layer):
    """Inverted dropout: activations scaled by 1/(1-rate) at train time so
    inference needs no rescaling."""

    def __init__(self, rate):
        super().__init__()
        self.rate = rate

    def forward(self, x, train=False, rng=None):
        if not train or self.rate == 0.0:
            self._mask = None
            return x
        if rng is None:
            raise NumericError("dropout in train mode requires an rng")
        keep = 1.0 - self.rate
        self._mask = (rng.random(x.shape) < keep).astype(x.dtype) / keep
        return x * self._mask

    def backward(self, dout):
        return dout if self._mask is None else dout * self._mask


def _im2col(xp: np.ndarray, k: int) -> np.ndarray:
    """(B, C, Hp, Wp) -> (B, C*k*k, Ho*Wo) patch matrix for a valid k x k
    sliding window."""
    b, c, hp, wp = xp.shape
    ho, wo = hp - k + 1, wp - k + 1
    cols = np.empty((b, c, k, k, ho, wo), dtype=xp.dtype)
    for di in range(k):
        for dj in range(k):
            cols[:, :, di, dj] = xp[:, :, di : di + ho, dj : dj + wo]
    return cols.reshape(b, c * k * k, ho * wo)


class Conv2d(Layer):
    """2D convolution (stride 1) via im2col + GEMM; symmetric zero padding.

    The input gradient is computed as a transposed correlation (another
    im2col + GEMM with the flipped kernel) rather than a scatter."""

    def __init__(self, c_in, c_out, ksize, pad, bias_init=0.0):
        super().__init__()
        self.c_in, self.c_out, self.k, self.pad = c_in, c_out, ksize, pad
        self.bias_init = bias_init

    def init(self, rng, dtype):
        fan_in = self.c_in * self.k * self.k
        std = np.sqrt(2.0 / fan_in)
        self.params["w"] = (
            rng.standard_normal((self.c_out, self.c_in, self.k, self.k)) * std
        ).astype(dtype)
        self.params["b"] = np.full(self.c_out, self.bias_init, dtype=dtype)

    def forward(self, x, train=False, rng=None):
        if x.ndim != 4 or x.shape[1] != self.c_in:
            raise ShapeError(f"Conv2d expects (B, {self.c_in}, H, W), got {x.shape}")
        b, _, h, w = x.shape
        k, p = self.k, self.pad
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
        ho, wo = h + 2 * p - k + 1, w + 2 * p - k + 1
        self._in_hw = (h, w)
        self._cols = _im2col(xp, k)  # (B, Ck^2, HoWo)
        wmat = self.params["w"].reshape(self.c_out, -1)
        out = np.matmul(wmat, self._cols) + self.params["b"][:, None]
        return out.reshape(b, self.c_out, ho, wo)

    def backward(self, dout):
        b, _, ho, wo = dout.shape
        h, w = self._in_hw
        k, p = self.k, self.pad
        d2 = dout.reshape(b, self.c_out, ho * wo)
        self.grads["w"] += np.matmul(d2, self._cols.transpose(0, 2, 1)).sum(0).reshape(
            self.params["w"].shape
        )
        self.grads["b"] += d2.sum((0, 2))
        # dx[ci] = sum_co corr(pad(dout[co], k-1-p), flip(w[co, ci]))
        q = k - 1 - p
        doutp = np.pad(dout, ((0, 0), (0, 0), (q, q), (q, q))) if q else dout
        cols2 = _im2col(doutp, k)  # (B, Co k^2, H W)
        wt = self.params["w"][:, :, ::-1, ::-1].transpose(1, 0, 2, 3).reshape(self.c_in, -1)
        return np.matmul(wt, cols2).reshape(b, self.c_in, h, w)


class BatchNorm2d(Layer):
    """Per-channel batch normalization with learned scale/shift and running
    statistics (used in infer mode)."""

    def __init__(self, channels, eps=1e-5, momentum=0.1):
        super().__init__()
        self.channels, self.eps, self.momentum = channels, eps, momentum

    def init(self, rng, dtype):
        self.params["gamma"] = np.ones(self.channels, dtype=dtype)
        self.params["beta"] = np.zeros(self.channels, dtype=dtype)
        self.buffers["running_mean"] = np.zeros(self.channels, dtype=dtype)
        self.buffers["running_var"] = np.ones(self.channels, dtype=dtype)

    def forward(self, x, train=False, rng=None):
        if x.ndim != 4 or x.shape[1] != self.channels:
            raise ShapeError(f"BatchNorm2d expects (B, {self.channels}, H, W), got {x.shape}")
        if train:
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            m = self.momentum
            self.buffers["running_mean"] *= 1 - m
            self.buffers["running_mean"] += (m * mean).astype(x.dtype)
            self.buffers["running_var"] *= 1 - m
            self.buffers["running_var"] += (m * var).astype(x.dtype)
        else:
            mean = self.buffers["running_mean"]
            var = self.buffers["running_var"]
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[None, :, None, None]) * inv[None, :, None, None]
        self._train = train
        self._xhat, self._inv = xhat, inv
        return self.params["gamma"][None, :, None, None] * xhat + self.params["beta"][
            None, :, None, None
        ]

    def backward(self, dout):
        g = self.params["gamma"][None, :, None, None]
        self.grads["gamma"] += (dout * self._xhat).sum(axis=(0, 2, 3))
        self.grads["beta"] += dout.sum(axis=(0, 2, 3))
        dxhat = dout * g
        inv = self._inv[None, :, None, None]
        if not self._train:
            return dxhat * inv
        # backprop through batch mean/variance
        m = dout.shape[0] * dout.shape[2] * dout.shape[3]
        sum_dxhat = dxhat.sum(axis=(0, 2, 3), keepdims=True)
        sum_dxhat_xhat = (dxhat * self._xhat).sum(axis=(0, 2, 3), keepdims=True)
        return inv / m * (m * dxhat - sum_dxhat - self._xhat * sum_dxhat_xhat)


class MaxPool2x2(Layer):
    """2x2 max pooling, stride 2, ceiling mode (odd sizes are padded with -inf)."""

    def forward(self, x, train=False, rng=None):
        b, c, h, w = x.shape
        ho, wo = (h + 1) // 2, (w + 1) // 2
        ph, pw = 2 * ho - h, 2 * wo - w
        if ph or pw:
            x = np.pad(x, ((0, 0), (0, 0), (0, ph), (0, pw)), constant_values=-np.inf)
        self._in_hw = (h, w)
        xr = x.reshape(b, c, ho, 2, wo, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, ho, wo, 4)
        self._idx = xr.argmax(-1)
        return np.take_along_axis(xr, self._idx[..., None], axis=-1)[..., 0]

    def backward(self, dout):
        b, c, ho, wo = dout.shape
        h, w = self._in_hw
        dxr = np.zeros((b, c, ho, wo, 4), dtype=dout.dtype)
        np.put_along_axis(dxr, self._idx[..., None], dout[..., None], axis=-1)
        dxp = dxr.reshape(b, c, ho, wo, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(
            b, c, 2 * ho, 2 * wo
        )
        return dxp[:, :, :h, :w]


class UpsampleNearest2x(Layer):
    """Nearest-neighbor x2 upsampling with top-left cropping to `out_size`."""

    def __init__(self, out_size):
        super().__init__()
        self.out_size = out_size

    def forward(self, x, train=False, rng=None):
        s = self.out_size
        if 2 * x.shape[2] < s or 2 * x.shape[3] < s:
            raise ShapeError(f"cannot crop upsampled {x.shape} to {s}")
        self._in_shape = x.shape
        return x.repeat(2, axis=2).repeat(2, axis=3)[:, :, :s, :s]

    def backward(self, dout):
        b, c, h, w = self._in_shape
        s = self.out_size
        dpad = np.zeros((b, c, 2 * h, 2 * w), dtype=dout.dtype)
        dpad[:, :, :s, :s] = dout
        return dpad.reshape(b, c, h, 2, w, 2).sum(axis=(3, 5))


class MatrixSymmetrize(Layer):
    """(Z + Z^T) / 2 over the trailing two dimensions."""

    def forward(self, x, train=False, rng=None):
        return 0.5 * (x + x.transpose(0, 1, 3, 2))

    def backward(self, dout):
        return 0.5 * (dout + dout.transpose(0, 1, 3, 2))
