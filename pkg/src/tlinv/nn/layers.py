"""Neural-network layers on numpy arrays with explicit forward/backward passes.

Every layer caches what its backward pass needs during forward. Backward
returns the gradient w.r.t. the layer input and fills ``self.grads`` for
parameters. All gradients are exact (verified against central finite
differences in the test suite), which keeps training fully deterministic:
the only randomness is the rng handed to ``__init__`` for initialization.

Conventions: images are (N, C, H, W); fully-connected activations (N, D).
Parameterized layers take a ``dtype`` (float64 default for precision;
model builders downcast to float32 for speed on desk-scale CPU runs).
Frozen layers (``trainable = False``) never update parameters, and frozen
batch-norm also pins its running statistics and normalizes with them even
in training mode, so a frozen block is a fixed deterministic function.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError

DTYPE = np.float64


def im2col(x: np.ndarray, kh: int, kw: int, stride: int, pad: int):
    """Extract sliding (kh, kw) patches. Returns (N, OH*OW, C*kh*kw) and (OH, OW)."""
    n, c, h, w = x.shape
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    hp, wp = h + 2 * pad, w + 2 * pad
    if hp < kh or wp < kw or (hp - kh) % stride or (wp - kw) % stride:
        raise ShapeError(
            f"window {kh}x{kw} stride {stride} does not tile padded input {hp}x{wp}"
        )
    oh = (hp - kh) // stride + 1
    ow = (wp - kw) // stride + 1
    win = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    win = win[:, :, ::stride, ::stride]  # (N, C, OH, OW, kh, kw)
    cols = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5))
    return cols.reshape(n, oh * ow, c * kh * kw), (oh, ow)


def col2im(cols: np.ndarray, x_shape, kh: int, kw: int, stride: int, pad: int) -> np.ndarray:
    """Adjoint of :func:`im2col`: scatter-add patch values back onto the grid."""
    n, c, h, w = x_shape
    hp, wp = h + 2 * pad, w + 2 * pad
    oh = (hp - kh) // stride + 1
    ow = (wp - kw) // stride + 1
    out = np.zeros((n, c, hp, wp), dtype=cols.dtype)
    cols6 = cols.reshape(n, oh, ow, c, kh, kw)
    for ki in range(kh):
        for kj in range(kw):
            # transposed slice view; scatter without materializing cols6
            out[:, :, ki : ki + stride * oh : stride, kj : kj + stride * ow : stride] += (
                cols6[:, :, :, :, ki, kj].transpose(0, 3, 1, 2)
            )
    if pad:
        out = out[:, :, pad : hp - pad, pad : wp - pad]
    return out


class Layer:
    """Base layer: parameter/gradient dicts plus a freeze flag."""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.trainable: bool = True

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray, need_dx: bool = True) -> np.ndarray | None:
        raise NotImplementedError

    # buffers are non-learned state that still belongs in checkpoints
    def buffers(self) -> dict[str, np.ndarray]:
        return {}


class Conv2d(Layer):
    def __init__(self, in_channels, out_channels, kernel=3, stride=1, pad=None, *, rng,
                 dtype=DTYPE):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.stride = stride
        self.pad = (kernel - 1) // 2 if pad is None else pad
        fan_in = in_channels * kernel * kernel
        self.params["w"] = rng.normal(
            0.0, np.sqrt(2.0 / fan_in), size=(out_channels, in_channels, kernel, kernel)
        ).astype(dtype)
        self.params["b"] = np.zeros(out_channels, dtype=dtype)
        self._cache = None

    def forward(self, x, train=False):
        if x.shape[1] != self.in_channels:
            raise ShapeError(f"expected {self.in_channels} input channels, got {x.shape[1]}")
        cols, (oh, ow) = im2col(x, self.kernel, self.kernel, self.stride, self.pad)
        wm = self.params["w"].reshape(self.out_channels, -1)
        out = cols @ wm.T + self.params["b"]
        self._cache = (cols, x.shape, oh, ow)
        return out.transpose(0, 2, 1).reshape(x.shape[0], self.out_channels, oh, ow)

    def backward(self, dout, need_dx=True):
        cols, x_shape, oh, ow = self._cache
        n = x_shape[0]
        dm = np.ascontiguousarray(dout.reshape(n, self.out_channels, oh * ow).transpose(0, 2, 1))
        flat_cols = cols.reshape(-1, cols.shape[-1])
        flat_d = dm.reshape(-1, self.out_channels)
        self.grads["w"] = (flat_d.T @ flat_cols).reshape(self.params["w"].shape)
        self.grads["b"] = flat_d.sum(axis=0)
        if not need_dx:
            return None
        dcols = dm @ self.params["w"].reshape(self.out_channels, -1)
        return col2im(dcols, x_shape, self.kernel, self.kernel, self.stride, self.pad)


class ConvTranspose2d(Layer):
    """Transposed convolution; output side = (in - 1)*stride - 2*pad + kernel."""

    def __init__(self, in_channels, out_channels, kernel=4, stride=2, pad=1, *, rng,
                 dtype=DTYPE):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.stride = stride
        self.pad = pad
        fan = in_channels * kernel * kernel + out_channels * kernel * kernel
        self.params["w"] = rng.normal(
            0.0, np.sqrt(2.0 / fan), size=(in_channels, out_channels, kernel, kernel)
        ).astype(dtype)
        self.params["b"] = np.zeros(out_channels, dtype=dtype)
        self._cache = None

    def out_size(self, size: int) -> int:
        return (size - 1) * self.stride - 2 * self.pad + self.kernel

    def forward(self, x, train=False):
        if x.shape[1] != self.in_channels:
            raise ShapeError(f"expected {self.in_channels} input channels, got {x.shape[1]}")
        n, _, h, w = x.shape
        oh, ow = self.out_size(h), self.out_size(w)
        if oh < 1 or ow < 1:
            raise ShapeError(f"transposed conv collapses {h}x{w} to {oh}x{ow}")
        xm = np.ascontiguousarray(x.reshape(n, self.in_channels, h * w).transpose(0, 2, 1))
        cols = xm @ self.params["w"].reshape(self.in_channels, -1)
        out = col2im(cols, (n, self.out_channels, oh, ow), self.kernel, self.kernel,
                     self.stride, self.pad)
        self._cache = (xm, x.shape, (oh, ow))
        return out + self.params["b"].reshape(1, -1, 1, 1)

    def backward(self, dout, need_dx=True):
        xm, x_shape, _ = self._cache
        n, _, h, w = x_shape
        dcols, _ = im2col(dout, self.kernel, self.kernel, self.stride, self.pad)
        flat_x = xm.reshape(-1, self.in_channels)
        flat_d = dcols.reshape(-1, dcols.shape[-1])
        self.grads["w"] = (flat_x.T @ flat_d).reshape(self.params["w"].shape)
        self.grads["b"] = dout.sum(axis=(0, 2, 3))
        if not need_dx:
            return None
        dxm = dcols @ self.params["w"].reshape(self.in_channels, -1).T
        return dxm.transpose(0, 2, 1).reshape(x_shape)


class BatchNorm2d(Layer):
    def __init__(self, channels, momentum=0.1, eps=1e-5, dtype=DTYPE):
        super().__init__()
        self.channels = channels
        self.momentum = momentum
        self.eps = eps
        self.params["gamma"] = np.ones(channels, dtype=dtype)
        self.params["beta"] = np.zeros(channels, dtype=dtype)
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self._cache = None

    def buffers(self):
        return {"running_mean": self.running_mean, "running_var": self.running_var}

    def forward(self, x, train=False):
        use_batch = train and self.trainable
        if use_batch:
            mean = x.mean(axis=(0, 2, 3))
            var = (x * x).mean(axis=(0, 2, 3)) - mean * mean
            var = np.maximum(var, 0.0)
            self.running_mean = ((1 - self.momentum) * self.running_mean
                                 + self.momentum * mean).astype(x.dtype)
            self.running_var = ((1 - self.momentum) * self.running_var
                                + self.momentum * var).astype(x.dtype)
        else:
            mean, var = self.running_mean, self.running_var
        ivar = 1.0 / np.sqrt(var + self.eps)
        # fused y = x * (g*ivar) + (beta - g*ivar*mean); xhat rebuilt lazily
        scale = self.params["gamma"] * ivar
        shift = self.params["beta"] - scale * mean
        self._cache = (x, mean, ivar, use_batch)
        return x * scale.reshape(1, -1, 1, 1) + shift.reshape(1, -1, 1, 1)

    def backward(self, dout, need_dx=True):
        x, mean, ivar, use_batch = self._cache
        xhat = (x - mean.reshape(1, -1, 1, 1)) * ivar.reshape(1, -1, 1, 1)
        self.grads["gamma"] = (dout * xhat).sum(axis=(0, 2, 3))
        self.grads["beta"] = dout.sum(axis=(0, 2, 3))
        if not need_dx:
            return None
        g = self.params["gamma"].reshape(1, -1, 1, 1)
        if not use_batch:
            return dout * g * ivar.reshape(1, -1, 1, 1)
        m = dout.shape[0] * dout.shape[2] * dout.shape[3]
        dxhat = dout * g
        s1 = dxhat.sum(axis=(0, 2, 3), keepdims=True)
        s2 = (dxhat * xhat).sum(axis=(0, 2, 3), keepdims=True)
        return (ivar.reshape(1, -1, 1, 1) / m) * (m * dxhat - s1 - xhat * s2)


class MaxPool2d(Layer):
    """2x2 (or sxs) max pooling via strided corner views; first-max tie rule."""

    def __init__(self, size=2):
        super().__init__()
        self.size = size
        self._cache = None

    def forward(self, x, train=False):
        n, c, h, w = x.shape
        s = self.size
        if s != 2:
            raise ShapeError("only 2x2 pooling is supported")
        if h % s or w % s:
            raise ShapeError(f"pool size {s} does not divide {h}x{w}")
        v = x.reshape(n, c, h // 2, 2, w // 2, 2)
        left, right = v[..., 0], v[..., 1]
        pick_right = right > left  # first-max tie rule: keep left on ties
        m1 = np.where(pick_right, right, left)  # (n, c, oh, 2, ow)
        top, bottom = m1[:, :, :, 0, :], m1[:, :, :, 1, :]
        pick_bottom = bottom > top
        out = np.where(pick_bottom, bottom, top)
        self._cache = (pick_right, pick_bottom, x.shape)
        return out

    def backward(self, dout, need_dx=True):
        pick_right, pick_bottom, x_shape = self._cache
        n, c, h, w = x_shape
        d1 = np.zeros((n, c, h // 2, 2, w // 2), dtype=dout.dtype)
        d1[:, :, :, 0, :] = np.where(pick_bottom, 0, dout)
        d1[:, :, :, 1, :] = np.where(pick_bottom, dout, 0)
        dx = np.zeros((n, c, h // 2, 2, w // 2, 2), dtype=dout.dtype)
        dx[..., 0] = np.where(pick_right, 0, d1)
        dx[..., 1] = np.where(pick_right, d1, 0)
        return dx.reshape(x_shape)


class ReLU(Layer):
    def forward(self, x, train=False):
        self._mask = x > 0
        return x * self._mask

    def backward(self, dout, need_dx=True):
        return dout * self._mask


class Tanh(Layer):
    def forward(self, x, train=False):
        self._out = np.tanh(x)
        return self._out

    def backward(self, dout, need_dx=True):
        return dout * (1.0 - self._out**2)


class Sigmoid(Layer):
    def forward(self, x, train=False):
        self._out = 1.0 / (1.0 + np.exp(-x))
        return self._out

    def backward(self, dout, need_dx=True):
        return dout * self._out * (1.0 - self._out)


class Flatten(Layer):
    def forward(self, x, train=False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout, need_dx=True):
        return dout.reshape(self._shape)


class Reshape(Layer):
    """Reshape the non-batch dimensions, e.g. a vector to (C, 1, 1)."""

    def __init__(self, target):
        super().__init__()
        self.target = tuple(target)

    def forward(self, x, train=False):
        self._shape = x.shape
        return x.reshape((x.shape[0],) + self.target)

    def backward(self, dout, need_dx=True):
        return dout.reshape(self._shape)


class Dense(Layer):
    def __init__(self, in_dim, out_dim, *, rng, dtype=DTYPE):
        super().__init__()
        self.in_dim, self.out_dim = in_dim, out_dim
        self.params["w"] = rng.normal(0.0, np.sqrt(2.0 / in_dim), size=(in_dim, out_dim)).astype(
            dtype
        )
        self.params["b"] = np.zeros(out_dim, dtype=dtype)

    def forward(self, x, train=False):
        if x.shape[1] != self.in_dim:
            raise ShapeError(f"expected input dim {self.in_dim}, got {x.shape[1]}")
        self._x = x
        return x @ self.params["w"] + self.params["b"]

    def backward(self, dout, need_dx=True):
        self.grads["w"] = self._x.T @ dout
        self.grads["b"] = dout.sum(axis=0)
        if not need_dx:
            return None
        return dout @ self.params["w"].T


class Softmax(Layer):
    """Row-wise softmax over the last axis. Caches logits for stable losses."""

    def forward(self, x, train=False):
        self.logits = x
        z = x - x.max(axis=-1, keepdims=True)
        e = np.exp(z)
        self._out = e / e.sum(axis=-1, keepdims=True)
        return self._out

    def backward(self, dout, need_dx=True):
        p = self._out
        return p * (dout - (dout * p).sum(axis=-1, keepdims=True))
