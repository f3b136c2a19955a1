"""Layer kernels: forward and backward passes on batched arrays.

Activations are (N, C, H, W) or (N, D). The single-sample entry points
accept unbatched arrays as well. Reductions run in float64 and results are
cast back to the inputs' common dtype.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from sketchrec.errors import ContractError


def _out_dtype(*arrays):
    return np.result_type(*[a.dtype for a in arrays])


def conv_output_size(size: int, kernel: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - kernel) // stride + 1


@njit(cache=True)
def _im2col_kernel(x, k, stride, ho, wo, cols):
    n, c = x.shape[0], x.shape[1]
    for ci in range(c):
        for i in range(k):
            for j in range(k):
                row = (ci * k + i) * k + j
                for ni in range(n):
                    base = ni * ho * wo
                    for r in range(ho):
                        for q in range(wo):
                            cols[row, base + r * wo + q] = x[ni, ci, r * stride + i, q * stride + j]


@njit(cache=True)
def _col2im_kernel(dcols, k, stride, ho, wo, dx):
    n, c = dx.shape[0], dx.shape[1]
    for ci in range(c):
        for i in range(k):
            for j in range(k):
                row = (ci * k + i) * k + j
                for ni in range(n):
                    base = ni * ho * wo
                    for r in range(ho):
                        for q in range(wo):
                            dx[ni, ci, r * stride + i, q * stride + j] += dcols[row, base + r * wo + q]


def _im2col(x: np.ndarray, k: int, stride: int, pad: int) -> tuple[np.ndarray, int, int]:
    """(N, C, H, W) -> (C*k*k, N*H'*W') float64 patch matrix."""
    n, c, h, w = x.shape
    x = x.astype(np.float64)
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    ho = (h + 2 * pad - k) // stride + 1
    wo = (w + 2 * pad - k) // stride + 1
    cols = np.empty((c * k * k, n * ho * wo))
    _im2col_kernel(np.ascontiguousarray(x), k, stride, ho, wo, cols)
    return cols, ho, wo


def _col2im(dcols: np.ndarray, x_shape, k: int, stride: int, pad: int, ho: int, wo: int) -> np.ndarray:
    n, c, h, w = x_shape
    dx = np.zeros((n, c, h + 2 * pad, w + 2 * pad))
    _col2im_kernel(np.ascontiguousarray(dcols), k, stride, ho, wo, dx)
    if pad:
        dx = dx[:, :, pad:-pad, pad:-pad]
    return dx


def conv2d_forward(x, weights, bias, stride: int = 1, pad: int = 0, name: str = "conv", return_cols: bool = False):
    """Cross-correlation with zero padding.

    ``x`` is (C, H, W) or (N, C, H, W); weights (O, C, k, k); bias (O,).
    """
    x = np.asarray(x)
    single = x.ndim == 3
    xb = x[None] if single else x
    o, c, k, k2 = weights.shape
    if k != k2:
        raise ContractError(f"{name}: only square kernels are supported, got {k}x{k2}")
    if xb.ndim != 4 or xb.shape[1] != c:
        raise ContractError(f"{name}: input shape {x.shape} does not match weights {weights.shape}")
    if bias.shape != (o,):
        raise ContractError(f"{name}: bias shape {bias.shape}, expected ({o},)")
    h, w = xb.shape[2:]
    if h + 2 * pad < k or w + 2 * pad < k:
        raise ContractError(f"{name}: kernel {k} larger than padded input {h + 2 * pad}x{w + 2 * pad}")
    cols, ho, wo = _im2col(xb, k, stride, pad)
    out = weights.reshape(o, -1).astype(np.float64) @ cols
    out += bias.astype(np.float64)[:, None]
    out = out.reshape(o, xb.shape[0], ho, wo).transpose(1, 0, 2, 3)
    out = np.ascontiguousarray(out, dtype=_out_dtype(x, weights, bias))
    if single:
        out = out[0]
    return (out, cols) if return_cols else out


def conv2d_backward(dout, x, weights, stride: int, pad: int, cols=None, input_grad: bool = True):
    """Gradients (dx, dW, db) for a batched convolution; dx is None unless ``input_grad``."""
    o, c, k, _ = weights.shape
    ho, wo = dout.shape[2:]
    if cols is None:
        cols, ho, wo = _im2col(x, k, stride, pad)
    dmat = np.ascontiguousarray(dout.transpose(1, 0, 2, 3), dtype=np.float64).reshape(o, -1)
    dw = (dmat @ cols.T).reshape(weights.shape)
    db = dmat.sum(axis=1)
    dx = None
    if input_grad:
        dcols = weights.reshape(o, -1).astype(np.float64).T @ dmat
        dx = _col2im(dcols, x.shape, k, stride, pad, ho, wo)
    return dx, dw, db


@njit(cache=True)
def _maxpool_kernel(x, window, stride, out, argmax):
    n, c, ho, wo = out.shape
    for ni in range(n):
        for ci in range(c):
            for r in range(ho):
                for q in range(wo):
                    best = x[ni, ci, r * stride, q * stride]
                    best_k = 0
                    for i in range(window):
                        for j in range(window):
                            v = x[ni, ci, r * stride + i, q * stride + j]
                            if v > best:
                                best = v
                                best_k = i * window + j
                    out[ni, ci, r, q] = best
                    argmax[ni, ci, r, q] = best_k


@njit(cache=True)
def _maxpool_backward_kernel(dout, argmax, window, stride, dx):
    n, c, ho, wo = dout.shape
    for ni in range(n):
        for ci in range(c):
            for r in range(ho):
                for q in range(wo):
                    a = argmax[ni, ci, r, q]
                    dx[ni, ci, r * stride + a // window, q * stride + a % window] += dout[ni, ci, r, q]


def maxpool_forward(x, window: int, stride: int, name: str = "pool"):
    """Max over each window; returns ``(out, argmax)``.

    ``argmax`` holds the row-major position inside each window of the first
    maximal element.
    """
    x = np.asarray(x)
    single = x.ndim == 3
    xb = np.ascontiguousarray(x[None] if single else x)
    n, c, h, w = xb.shape
    if window > h or window > w:
        raise ContractError(f"{name}: window {window} larger than input {h}x{w}")
    ho, wo = (h - window) // stride + 1, (w - window) // stride + 1
    out = np.empty((n, c, ho, wo), dtype=xb.dtype)
    argmax = np.empty((n, c, ho, wo), dtype=np.int64)
    _maxpool_kernel(xb, window, stride, out, argmax)
    if single:
        return out[0], argmax[0]
    return out, argmax


def maxpool_backward(dout, x_shape, argmax, window: int, stride: int):
    """Route each output gradient to its window's recorded winner."""
    single = len(x_shape) == 3
    dout = np.ascontiguousarray(dout[None] if single else dout, dtype=np.float64)
    argmax = np.ascontiguousarray(argmax[None] if single else argmax)
    dx = np.zeros(((1,) + tuple(x_shape)) if single else x_shape)
    _maxpool_backward_kernel(dout, argmax, window, stride, dx)
    return dx[0] if single else dx


def inner_product_forward(x, weights, bias, name: str = "ip", batched: bool = False):
    """``weights @ x + bias``; ``x`` is flattened (per sample when ``batched``)."""
    x = np.asarray(x)
    u, d = weights.shape
    xb = x.reshape(x.shape[0], -1) if batched else x.reshape(1, -1)
    if xb.shape[1] != d:
        raise ContractError(f"{name}: input of length {xb.shape[1]} does not match weights {weights.shape}")
    if bias.shape != (u,):
        raise ContractError(f"{name}: bias shape {bias.shape}, expected ({u},)")
    out = xb.astype(np.float64) @ weights.astype(np.float64).T + bias.astype(np.float64)
    out = out.astype(_out_dtype(x, weights, bias))
    return out if batched else out[0]


def inner_product_backward(dout, x, weights):
    xb = x.reshape(x.shape[0], -1).astype(np.float64)
    d = dout.astype(np.float64)
    dw = d.T @ xb
    db = d.sum(axis=0)
    dx = (d @ weights.astype(np.float64)).reshape(x.shape)
    return dx, dw, db


def relu_forward(x):
    return np.maximum(x, 0)


def relu_backward(dout, x):
    return np.where(x > 0, dout, 0)


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_loss(logits, label):
    """Cross-entropy of a stabilized softmax.

    Single sample: ``logits`` (K,), ``label`` int -> ``(loss, probs)``.
    Batch: ``logits`` (N, K), ``label`` (N,) -> mean loss and (N, K) probs.
    """
    logits = np.asarray(logits)
    k = logits.shape[-1]
    if k < 2:
        raise ContractError(f"softmax needs at least 2 classes, got {k}")
    labels = np.atleast_1d(np.asarray(label))
    if labels.min() < 0 or labels.max() >= k:
        raise ContractError(f"label {labels.max() if labels.max() >= k else labels.min()} outside [0, {k})")
    z = logits.astype(np.float64).reshape(-1, k)
    z = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    log_p = z[np.arange(len(z)), labels] - log_norm
    probs = np.exp(z - log_norm[:, None])
    loss = float(-log_p.mean())
    if logits.ndim == 1:
        return loss, probs[0]
    return loss, probs
