"""Differentiable spatial primitives and the DCT.

Image-shaped tensors are channel-first ``[C, H, W]``; there is no batch
axis anywhere in the package (one content/style pair per step).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import fft as _fft

from .tensor import Tensor, _record, as_tensor


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax along ``axis``."""
    x = as_tensor(x)
    if not -x.ndim <= axis < x.ndim:
        raise ValueError(f"axis {axis} out of range for {x.ndim}-d input")
    if not np.all(np.isfinite(x.data)):
        raise FloatingPointError("softmax input contains non-finite values")
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _record(out, (x,), bw, "softmax")


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis with biased variance, then scale and shift."""
    if eps <= 0:
        raise ValueError("layer_norm eps must be positive")
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    n = x.shape[-1]
    if gamma.shape != (n,) or beta.shape != (n,):
        raise ValueError(f"gamma/beta must have shape ({n},)")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + eps)
    xhat = xc * inv
    out = xhat * gamma.data + beta.data

    def bw(g):
        lead = tuple(range(g.ndim - 1))
        ggamma = (g * xhat).sum(axis=lead)
        gbeta = g.sum(axis=lead)
        gx_hat = g * gamma.data
        gx = inv / n * (n * gx_hat - gx_hat.sum(-1, keepdims=True)
                        - xhat * (gx_hat * xhat).sum(-1, keepdims=True))
        return gx, ggamma, gbeta

    return _record(out, (x, gamma, beta), bw, "layer_norm")


def _pad_indices(n: int, pad: int) -> np.ndarray:
    return np.clip(np.arange(-pad, n + pad), 0, n - 1)


def conv2d(x: Tensor, weight: Tensor, bias: Tensor | None = None, stride: int = 1,
           padding: int = 0, pad_mode: str = "zero") -> Tensor:
    """Cross-correlation of a ``[C_in, H, W]`` input with ``[C_out, C_in, k, k]``.

    ``pad_mode`` is ``"zero"`` or ``"replicate"``. Output extents are
    ``(H + 2*padding - k) // stride + 1``.
    """
    x, weight = as_tensor(x), as_tensor(weight)
    if x.ndim != 3 or weight.ndim != 4:
        raise ValueError("conv2d expects input [C,H,W] and kernel [O,C,k,k]")
    c_in, h, w = x.shape
    c_out, wc, k, k2 = weight.shape
    if wc != c_in or k != k2:
        raise ValueError(f"kernel {weight.shape} does not match input {x.shape}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if pad_mode not in ("zero", "replicate"):
        raise ValueError(f"unknown pad_mode {pad_mode!r}")
    hp, wp = h + 2 * padding, w + 2 * padding
    if k > hp or k > wp:
        raise ValueError("kernel larger than padded input")
    if padding == 0:
        xp = x.data
    elif pad_mode == "zero":
        xp = np.pad(x.data, ((0, 0), (padding, padding), (padding, padding)))
    else:
        ri, ci = _pad_indices(h, padding), _pad_indices(w, padding)
        xp = x.data[:, ri][:, :, ci]
    ho = (hp - k) // stride + 1
    wo = (wp - k) // stride + 1
    win = sliding_window_view(xp, (k, k), axis=(1, 2))[:, ::stride, ::stride][:, :ho, :wo]
    cols = win.transpose(1, 2, 0, 3, 4).reshape(ho * wo, c_in * k * k)
    wmat = weight.data.reshape(c_out, -1)
    out = (cols @ wmat.T).T.reshape(c_out, ho, wo)
    parents = [x, weight]
    if bias is not None:
        bias = as_tensor(bias)
        out = out + bias.data[:, None, None]
        parents.append(bias)

    def bw(g):
        gm = g.reshape(c_out, ho * wo)
        gw = (gm @ cols).reshape(weight.shape)
        gcols = (gm.T @ wmat).reshape(ho, wo, c_in, k, k)
        gxp = np.zeros(xp.shape)
        span_h, span_w = stride * (ho - 1) + 1, stride * (wo - 1) + 1
        for i in range(k):
            for j in range(k):
                gxp[:, i:i + span_h:stride, j:j + span_w:stride] += gcols[:, :, :, i, j].transpose(2, 0, 1)
        if padding == 0:
            gx = gxp
        elif pad_mode == "zero":
            gx = gxp[:, padding:padding + h, padding:padding + w]
        else:
            gx = np.zeros(x.shape)
            tmp = np.zeros((c_in, h, wp))
            np.add.at(tmp, (slice(None), ri), gxp)
            np.add.at(gx, (slice(None), slice(None), ci), tmp)
        grads = [gx, gw]
        if bias is not None:
            grads.append(gm.sum(axis=1))
        return tuple(grads)

    return _record(out, parents, bw, "conv2d")


def avg_pool2d(x: Tensor, k: int) -> Tensor:
    """Non-overlapping k×k average pooling, as a conv2d with a uniform kernel."""
    x = as_tensor(x)
    c = x.shape[0]
    kernel = np.zeros((c, c, k, k))
    kernel[np.arange(c), np.arange(c)] = 1.0 / (k * k)
    return conv2d(x, Tensor(kernel), None, stride=k, padding=0)


def _lerp_plan(n_in: int, n_out: int):
    # align-corners: output i samples input at i*(n_in-1)/(n_out-1)
    if n_out == 1 or n_in == 1:
        src = np.zeros(n_out)
    else:
        src = np.arange(n_out) * (n_in - 1) / (n_out - 1)
    i0 = np.minimum(np.floor(src).astype(np.int64), n_in - 1)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = src - i0
    return i0, i1, frac


def _lerp_axis(a: np.ndarray, axis: int, plan) -> np.ndarray:
    i0, i1, frac = plan
    shape = [1] * a.ndim
    shape[axis] = -1
    f = frac.reshape(shape)
    lo = np.take(a, i0, axis=axis)
    hi = np.take(a, i1, axis=axis)
    return lo + f * (hi - lo)


def _lerp_axis_grad(g: np.ndarray, axis: int, plan, n_in: int) -> np.ndarray:
    i0, i1, frac = plan
    shape = [1] * g.ndim
    shape[axis] = -1
    f = frac.reshape(shape)
    out_shape = list(g.shape)
    out_shape[axis] = n_in
    out = np.zeros(out_shape)
    idx = [slice(None)] * g.ndim
    idx[axis] = i0
    np.add.at(out, tuple(idx), g * (1.0 - f))
    idx[axis] = i1
    np.add.at(out, tuple(idx), g * f)
    return out


def resize_bilinear(x: Tensor, out_h: int, out_w: int) -> Tensor:
    """Bilinear resize of ``[C, H, W]`` with align-corners sampling.

    Interpolation is evaluated as ``lo + t*(hi - lo)`` so constant inputs and
    same-size resizes are reproduced exactly, not just to rounding.
    """
    x = as_tensor(x)
    if x.ndim != 3:
        raise ValueError("resize_bilinear expects [C,H,W]")
    if out_h < 1 or out_w < 1:
        raise ValueError("output size must be >= 1")
    _, h, w = x.shape
    ph, pw = _lerp_plan(h, out_h), _lerp_plan(w, out_w)
    tmp = _lerp_axis(x.data, 1, ph)
    out = _lerp_axis(tmp, 2, pw)

    def bw(g):
        gt = _lerp_axis_grad(g, 2, pw, w)
        return (_lerp_axis_grad(gt, 1, ph, h),)

    return _record(out, (x,), bw, "resize_bilinear")


def upsample_nearest(x: Tensor, factor: int = 2) -> Tensor:
    x = as_tensor(x)
    c, h, w = x.shape
    out = np.repeat(np.repeat(x.data, factor, axis=1), factor, axis=2)

    def bw(g):
        return (g.reshape(c, h, factor, w, factor).sum(axis=(2, 4)),)

    return _record(out, (x,), bw, "upsample_nearest")


def dct2d(block) -> np.ndarray:
    """Orthonormal 2-D DCT-II of a square block."""
    arr = block.data if isinstance(block, Tensor) else np.asarray(block, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise ValueError("dct2d expects a non-empty square block")
    return _fft.dctn(arr, type=2, norm="ortho")
