"""Minimal dense tensor layers with hand-written backward passes.

Desk-scale building blocks for the reference denoiser: im2col convolutions,
transposed convolutions, SiLU, linear maps, optional group normalization, and
Adam/SGD optimizers. Arrays are plain numpy, NCHW layout; every layer caches
what its backward pass needs, so one layer instance serves one forward pass at
a time.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class TensorError(Exception):
    pass


class Parameter:
    def __init__(self, value: np.ndarray, name: str):
        self.value = value
        self.grad = np.zeros_like(value)
        self.name = name

    @property
    def size(self) -> int:
        return self.value.size

    def zero_grad(self) -> None:
        self.grad[...] = 0.0


class Layer:
    def parameters(self) -> list[Parameter]:
        return []


def _im2col(x: np.ndarray, k: int, stride: int, pad: int) -> tuple[np.ndarray, tuple[int, int]]:
    """(B, C, H, W) -> (B, Ho*Wo, C*k*k) patch matrix."""
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    windows = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    b, c, ho, wo = windows.shape[:4]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(b, ho * wo, c * k * k)
    return np.ascontiguousarray(cols), (ho, wo)


def _col2im(dcols: np.ndarray, x_shape, k: int, stride: int, pad: int, out_hw) -> np.ndarray:
    """Adjoint of _im2col: scatter-add patch gradients back onto the input."""
    b, c, h, w = x_shape
    ho, wo = out_hw
    dx_pad = np.zeros((b, c, h + 2 * pad, w + 2 * pad), dtype=dcols.dtype)
    d = dcols.reshape(b, ho, wo, c, k, k)
    for ki in range(k):
        for kj in range(k):
            dx_pad[:, :, ki : ki + stride * ho : stride, kj : kj + stride * wo : stride] += d[
                :, :, :, :, ki, kj
            ].transpose(0, 3, 1, 2)
    if pad:
        return dx_pad[:, :, pad:-pad, pad:-pad]
    return dx_pad


class Conv2d(Layer):
    def __init__(self, cin: int, cout: int, k: int = 3, stride: int = 1, pad: int = 1, rng=None, dtype=np.float32, name: str = "conv"):
        rng = rng or np.random.default_rng(0)
        scale = math.sqrt(2.0 / (cin * k * k))
        self.w = Parameter((rng.standard_normal((cout, cin * k * k)) * scale).astype(dtype), f"{name}.w")
        self.b = Parameter(np.zeros(cout, dtype=dtype), f"{name}.b")
        self.cin, self.cout, self.k, self.stride, self.pad = cin, cout, k, stride, pad
        self._cache = None

    def parameters(self):
        return [self.w, self.b]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[1] != self.cin:
            raise TensorError(f"{self.w.name}: expected {self.cin} input channels, got {x.shape[1]}")
        cols, (ho, wo) = _im2col(x, self.k, self.stride, self.pad)
        out = cols @ self.w.value.T + self.b.value
        self._cache = (cols, x.shape, (ho, wo))
        return out.transpose(0, 2, 1).reshape(x.shape[0], self.cout, ho, wo)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        cols, x_shape, out_hw = self._cache
        b = dout.shape[0]
        d2 = dout.reshape(b, self.cout, -1).transpose(0, 2, 1)  # (B, Ho*Wo, cout)
        self.w.grad += np.einsum("bpc,bpk->ck", d2, cols, optimize=True)
        self.b.grad += d2.sum(axis=(0, 1))
        dcols = d2 @ self.w.value
        return _col2im(dcols, x_shape, self.k, self.stride, self.pad, out_hw)


class ConvTranspose2d(Layer):
    """Stride-s transposed convolution (the adjoint of a stride-s Conv2d)."""

    def __init__(self, cin: int, cout: int, k: int = 2, stride: int = 2, rng=None, dtype=np.float32, name: str = "convT"):
        rng = rng or np.random.default_rng(0)
        scale = math.sqrt(2.0 / (cin * k * k))
        self.w = Parameter((rng.standard_normal((cin, cout * k * k)) * scale).astype(dtype), f"{name}.w")
        self.b = Parameter(np.zeros(cout, dtype=dtype), f"{name}.b")
        self.cin, self.cout, self.k, self.stride = cin, cout, k, stride
        self._cache = None

    def parameters(self):
        return [self.w, self.b]

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, c, h, w = x.shape
        if c != self.cin:
            raise TensorError(f"{self.w.name}: expected {self.cin} input channels, got {c}")
        ho, wo = (h - 1) * self.stride + self.k, (w - 1) * self.stride + self.k
        # Patches contributed by each input pixel, then scatter-added.
        patches = x.transpose(0, 2, 3, 1).reshape(b, h * w, c) @ self.w.value  # (B, H*W, cout*k*k)
        out = _col2im(
            patches.reshape(b, h * w, self.cout * self.k * self.k),
            (b, self.cout, ho, wo),
            self.k,
            self.stride,
            0,
            (h, w),
        )
        out += self.b.value[None, :, None, None]
        self._cache = (x, (ho, wo))
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x, _ = self._cache
        b, c, h, w = x.shape
        dcols, _ = _im2col(dout, self.k, self.stride, 0)  # (B, H*W, cout*k*k)
        self.w.grad += np.einsum("bpc,bpk->ck", x.transpose(0, 2, 3, 1).reshape(b, h * w, c), dcols, optimize=True)
        self.b.grad += dout.sum(axis=(0, 2, 3))
        dx = dcols @ self.w.value.T  # (B, H*W, cin)
        return dx.reshape(b, h, w, c).transpose(0, 3, 1, 2)


class SiLU(Layer):
    def __init__(self):
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        # Stable sigmoid: never exponentiates a large positive argument.
        sig = np.empty_like(x)
        pos = x >= 0
        sig[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        sig[~pos] = ex / (1.0 + ex)
        self._cache = (x, sig)
        return x * sig

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x, sig = self._cache
        return dout * (sig * (1.0 + x * (1.0 - sig)))


class Linear(Layer):
    def __init__(self, nin: int, nout: int, rng=None, dtype=np.float32, name: str = "linear"):
        rng = rng or np.random.default_rng(0)
        scale = math.sqrt(1.0 / nin)
        self.w = Parameter((rng.standard_normal((nout, nin)) * scale).astype(dtype), f"{name}.w")
        self.b = Parameter(np.zeros(nout, dtype=dtype), f"{name}.b")
        self._cache = None

    def parameters(self):
        return [self.w, self.b]

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._cache = x
        return x @ self.w.value.T + self.b.value

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x = self._cache
        self.w.grad += dout.T @ x
        self.b.grad += dout.sum(axis=0)
        return dout @ self.w.value


class GroupNorm(Layer):
    """Per-group feature normalization with affine parameters; optional in the
    reference denoiser (off by default)."""

    def __init__(self, groups: int, channels: int, eps: float = 1e-5, dtype=np.float32, name: str = "gn"):
        if channels % groups:
            raise TensorError(f"{name}: channels {channels} not divisible by groups {groups}")
        self.groups, self.channels, self.eps = groups, channels, eps
        self.gamma = Parameter(np.ones(channels, dtype=dtype), f"{name}.gamma")
        self.beta = Parameter(np.zeros(channels, dtype=dtype), f"{name}.beta")
        self._cache = None

    def parameters(self):
        return [self.gamma, self.beta]

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, c, h, w = x.shape
        g = self.groups
        xg = x.reshape(b, g, c // g * h * w)
        mu = xg.mean(axis=2, keepdims=True)
        var = xg.var(axis=2, keepdims=True)
        xhat = (xg - mu) / np.sqrt(var + self.eps)
        self._cache = (xhat, var, x.shape)
        out = xhat.reshape(b, c, h, w) * self.gamma.value[None, :, None, None] + self.beta.value[None, :, None, None]
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        xhat, var, shape = self._cache
        b, c, h, w = shape
        g = self.groups
        self.gamma.grad += (dout * xhat.reshape(b, c, h, w)).sum(axis=(0, 2, 3))
        self.beta.grad += dout.sum(axis=(0, 2, 3))
        dxhat = (dout * self.gamma.value[None, :, None, None]).reshape(b, g, c // g * h * w)
        n = dxhat.shape[2]
        inv_std = 1.0 / np.sqrt(var + self.eps)
        dx = (inv_std / n) * (n * dxhat - dxhat.sum(axis=2, keepdims=True) - xhat * (dxhat * xhat).sum(axis=2, keepdims=True))
        return dx.reshape(b, c, h, w)


def sinusoidal_embedding(t: np.ndarray, dim: int, dtype=np.float32) -> np.ndarray:
    """DDPM-style timestep features: interleaved sin/cos at geometric frequencies."""
    t = np.asarray(t, dtype=np.float64).reshape(-1)
    half = dim // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half) / max(half - 1, 1))
    args = t[:, None] * freqs[None, :]
    emb = np.concatenate([np.sin(args), np.cos(args)], axis=1)
    if dim % 2:
        emb = np.concatenate([emb, np.zeros((len(t), 1))], axis=1)
    return emb.astype(dtype)


class Adam:
    def __init__(self, params: list[Parameter], lr: float = 1e-4, betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.value) for p in params]
        self.v = [np.zeros_like(p.value) for p in params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        self.step_count += 1
        bc1 = 1.0 - self.b1**self.step_count
        bc2 = 1.0 - self.b2**self.step_count
        for p, m, v in zip(self.params, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * p.grad
            v *= self.b2
            v += (1.0 - self.b2) * p.grad * p.grad
            p.value -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


class SGD:
    def __init__(self, params: list[Parameter], lr: float = 1e-2):
        self.params = params
        self.lr = lr

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        for p in self.params:
            p.value -= self.lr * p.grad
