"""Differentiable building blocks: 3x3 convolution with reflection
padding, LeakyReLU, factor-2 bilinear upsampling, sigmoid, channel
concatenation.

Each op returns (output, cache); the matching ``*_backward`` consumes the
cache and an upstream gradient and produces exact adjoints. All arrays
are (channels, height, width) float64.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class LayerError(Exception):
    pass


def conv2d(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray, stride: int = 1):
    """3x3 convolution after 1-pixel mirror padding; stride 1 or 2.

    Stride-2 output dims are ceil(input/2). Mirror padding requires the
    input to be at least 2x2.
    """
    if kernel.ndim != 4 or kernel.shape[2:] != (3, 3):
        raise LayerError(f"kernel must be (out, in, 3, 3), got {kernel.shape}")
    if x.shape[0] != kernel.shape[1]:
        raise LayerError(f"input has {x.shape[0]} channels, kernel expects {kernel.shape[1]}")
    if x.shape[1] < 2 or x.shape[2] < 2:
        raise LayerError(f"input spatial dims must be >= 2x2, got {x.shape}")
    if stride not in (1, 2):
        raise LayerError(f"stride must be 1 or 2, got {stride}")
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1)), mode="reflect")
    win = sliding_window_view(xp, (3, 3), axis=(1, 2))[:, ::stride, ::stride]
    y = np.einsum("oikl,ihwkl->ohw", kernel, win, optimize=True)
    y += bias[:, None, None]
    return y, (x.shape, xp, kernel, stride)


def conv2d_backward(cache, gy: np.ndarray):
    """Gradients w.r.t. input, kernel, and bias."""
    x_shape, xp, kernel, stride = cache
    win = sliding_window_view(xp, (3, 3), axis=(1, 2))[:, ::stride, ::stride]
    gk = np.einsum("ohw,ihwkl->oikl", gy, win, optimize=True)
    gb = gy.sum(axis=(1, 2))

    out_h, out_w = gy.shape[1], gy.shape[2]
    gxp = np.zeros_like(xp)
    for ky in range(3):
        for kx in range(3):
            contrib = np.tensordot(kernel[:, :, ky, kx], gy, axes=(0, 0))
            gxp[:, ky : ky + stride * out_h : stride, kx : kx + stride * out_w : stride] += contrib

    # adjoint of the mirror padding: fold pad rows/cols onto their sources
    gx = gxp[:, 1:-1, 1:-1].copy()
    gx[:, 1, :] += gxp[:, 0, 1:-1]
    gx[:, -2, :] += gxp[:, -1, 1:-1]
    gx[:, :, 1] += gxp[:, 1:-1, 0]
    gx[:, :, -2] += gxp[:, 1:-1, -1]
    gx[:, 1, 1] += gxp[:, 0, 0]
    gx[:, 1, -2] += gxp[:, 0, -1]
    gx[:, -2, 1] += gxp[:, -1, 0]
    gx[:, -2, -2] += gxp[:, -1, -1]
    return gx, gk, gb


def leaky_relu(x: np.ndarray, slope: float):
    if not 0.0 < slope < 1.0:
        raise LayerError(f"slope must lie in (0, 1), got {slope}")
    gate = np.where(x >= 0.0, 1.0, slope)
    return x * gate, gate


def leaky_relu_backward(gate: np.ndarray, gy: np.ndarray) -> np.ndarray:
    return gy * gate


def _up_axis_tables(n: int):
    # half-pixel centers: source coordinate d/2 - 0.25, clamped
    coords = np.clip(np.arange(2 * n, dtype=np.float64) / 2.0 - 0.25, 0.0, n - 1.0)
    lo = np.floor(coords).astype(np.intp)
    hi = np.minimum(lo + 1, n - 1)
    frac = coords - lo
    return lo, hi, frac


def upsample_bilinear2x(x: np.ndarray):
    """Factor-2 bilinear upsampling with half-pixel alignment."""
    h, w = x.shape[1], x.shape[2]
    r_lo, r_hi, r_f = _up_axis_tables(h)
    c_lo, c_hi, c_f = _up_axis_tables(w)
    rows = x[:, r_lo, :] * (1.0 - r_f)[None, :, None] + x[:, r_hi, :] * r_f[None, :, None]
    y = rows[:, :, c_lo] * (1.0 - c_f)[None, None, :] + rows[:, :, c_hi] * c_f[None, None, :]
    return y, (h, w)


def upsample_bilinear2x_backward(cache, gy: np.ndarray) -> np.ndarray:
    """Exact adjoint of the upsampling linear map."""
    h, w = cache
    r_lo, r_hi, r_f = _up_axis_tables(h)
    c_lo, c_hi, c_f = _up_axis_tables(w)
    grows = np.zeros((gy.shape[0], 2 * h, w), dtype=np.float64)
    np.add.at(grows, (slice(None), slice(None), c_lo), gy * (1.0 - c_f)[None, None, :])
    np.add.at(grows, (slice(None), slice(None), c_hi), gy * c_f[None, None, :])
    gx = np.zeros((gy.shape[0], h, w), dtype=np.float64)
    np.add.at(gx, (slice(None), r_lo, slice(None)), grows * (1.0 - r_f)[None, :, None])
    np.add.at(gx, (slice(None), r_hi, slice(None)), grows * r_f[None, :, None])
    return gx


def sigmoid(x: np.ndarray):
    # split form avoids overflow for large |x|
    y = np.empty_like(x)
    pos = x >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    y[~pos] = ex / (1.0 + ex)
    return y, y


def sigmoid_backward(y: np.ndarray, gy: np.ndarray) -> np.ndarray:
    return gy * y * (1.0 - y)


def concat_channels(parts: list[np.ndarray]):
    sizes = [p.shape[0] for p in parts]
    return np.concatenate(parts, axis=0), sizes


def concat_channels_backward(sizes: list[int], gy: np.ndarray) -> list[np.ndarray]:
    out = []
    start = 0
    for s in sizes:
        out.append(gy[start : start + s])
        start += s
    return out
