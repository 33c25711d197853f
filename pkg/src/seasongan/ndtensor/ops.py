"""Forward and backward kernels for the layer types used by the networks.

All kernels work on NCHW arrays. Convolutions are lowered to a single matrix
product over an im2col view, so results are deterministic for a fixed BLAS and
input shape.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import ConvSpec, ShapeError

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


def _check_conv_args(x: np.ndarray, weights: np.ndarray, spec: ConvSpec, transposed: bool) -> None:
    if x.ndim != 4:
        raise ShapeError(f"expected NCHW input, got {x.ndim} dimensions {x.shape}")
    k = spec.kernel
    if transposed:
        expected = (spec.in_channels, spec.out_channels, k, k)
    else:
        expected = (spec.out_channels, spec.in_channels, k, k)
    if weights.shape != expected:
        raise ShapeError(f"weights have shape {weights.shape}, expected {expected} for {spec}")
    if x.shape[1] != spec.in_channels:
        raise ShapeError(f"input has {x.shape[1]} channels (dim 1), spec expects {spec.in_channels}")


def _im2col(x: np.ndarray, spec: ConvSpec, out_h: int, out_w: int) -> np.ndarray:
    """Patches of ``x`` as rows of an (N*H'*W', C*k*k) matrix."""
    p, s, k = spec.padding, spec.stride, spec.kernel
    if p:
        x = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    win = sliding_window_view(x, (k, k), axis=(2, 3))
    win = win[:, :, : s * (out_h - 1) + 1 : s, : s * (out_w - 1) + 1 : s]
    n, c = x.shape[:2]
    return win.transpose(0, 2, 3, 1, 4, 5).reshape(n * out_h * out_w, c * k * k)


def _col2im(cols: np.ndarray, shape: tuple[int, ...], spec: ConvSpec, out_h: int, out_w: int) -> np.ndarray:
    """Adjoint of ``_im2col``: scatter-add patch rows back into an image."""
    n, c, h, w = shape
    p, s, k = spec.padding, spec.stride, spec.kernel
    cols = cols.reshape(n, out_h, out_w, c, k, k).transpose(0, 3, 4, 5, 1, 2)
    img = np.zeros((n, c, h + 2 * p, w + 2 * p), dtype=cols.dtype)
    for i in range(k):
        for j in range(k):
            img[:, :, i : i + s * out_h : s, j : j + s * out_w : s] += cols[:, :, i, j]
    if p:
        img = img[:, :, p : p + h, p : p + w]
    return np.ascontiguousarray(img)


def conv2d(x: np.ndarray, weights: np.ndarray, bias: np.ndarray | None, spec: ConvSpec) -> np.ndarray:
    """Strided, zero-padded 2-D cross-correlation.

    ``weights`` is (K, C, k, k); ``bias`` is (K,) or None.
    """
    _check_conv_args(x, weights, spec, transposed=False)
    n = x.shape[0]
    out_h, out_w = spec.output_size(x.shape[2]), spec.output_size(x.shape[3])
    cols = _im2col(x, spec, out_h, out_w)
    out = cols @ weights.reshape(spec.out_channels, -1).T
    if bias is not None:
        out += bias
    return np.ascontiguousarray(out.reshape(n, out_h, out_w, spec.out_channels).transpose(0, 3, 1, 2))


def conv2d_backward(grad_out, saved_input, weights, spec: ConvSpec, input_grad: bool = True):
    """Gradients of ``conv2d`` with respect to input, weights and bias.

    With ``input_grad=False`` the (costly) input gradient is returned as None.
    """
    if saved_input is None:
        raise ValueError("conv2d_backward needs the input saved during the forward pass")
    _check_conv_args(saved_input, weights, spec, transposed=False)
    n = saved_input.shape[0]
    out_h, out_w = spec.output_size(saved_input.shape[2]), spec.output_size(saved_input.shape[3])
    expected = (n, spec.out_channels, out_h, out_w)
    if grad_out.shape != expected:
        raise ShapeError(f"grad_out has shape {grad_out.shape}, forward output was {expected}")
    g = grad_out.transpose(0, 2, 3, 1).reshape(-1, spec.out_channels)
    cols = _im2col(saved_input, spec, out_h, out_w)
    w2 = weights.reshape(spec.out_channels, -1)
    grad_w = (g.T @ cols).reshape(weights.shape)
    grad_b = g.sum(axis=0)
    grad_x = _col2im(g @ w2, saved_input.shape, spec, out_h, out_w) if input_grad else None
    return grad_x, grad_w, grad_b


def transposed_conv2d(x: np.ndarray, weights: np.ndarray, bias: np.ndarray | None, spec: ConvSpec) -> np.ndarray:
    """Fractionally strided convolution, the linear adjoint of ``conv2d``.

    ``weights`` is (C_in, C_out, k, k): the same array a ``conv2d`` from C_out
    to C_in channels would use.
    """
    _check_conv_args(x, weights, spec, transposed=True)
    n, _, h, w = x.shape
    out_h, out_w = spec.transposed_output_size(h), spec.transposed_output_size(w)
    g = x.transpose(0, 2, 3, 1).reshape(-1, spec.in_channels)
    forward_spec = _forward_spec(spec)
    out = _col2im(g @ weights.reshape(spec.in_channels, -1), (n, spec.out_channels, out_h, out_w),
                  forward_spec, h, w)
    if bias is not None:
        out += bias[None, :, None, None]
    return out


def transposed_conv2d_backward(grad_out, saved_input, weights, spec: ConvSpec):
    if saved_input is None:
        raise ValueError("transposed_conv2d_backward needs the input saved during the forward pass")
    _check_conv_args(saved_input, weights, spec, transposed=True)
    n, _, h, w = saved_input.shape
    expected = (n, spec.out_channels, spec.transposed_output_size(h), spec.transposed_output_size(w))
    if grad_out.shape != expected:
        raise ShapeError(f"grad_out has shape {grad_out.shape}, forward output was {expected}")
    forward_spec = _forward_spec(spec)
    cols = _im2col(grad_out, forward_spec, h, w)
    grad_x = cols @ weights.reshape(spec.in_channels, -1).T
    grad_x = np.ascontiguousarray(grad_x.reshape(n, h, w, spec.in_channels).transpose(0, 3, 1, 2))
    xs = saved_input.transpose(0, 2, 3, 1).reshape(-1, spec.in_channels)
    grad_w = (xs.T @ cols).reshape(weights.shape)
    grad_b = grad_out.sum(axis=(0, 2, 3))
    return grad_x, grad_w, grad_b


def _forward_spec(spec: ConvSpec) -> ConvSpec:
    return ConvSpec(spec.out_channels, spec.in_channels, spec.kernel, spec.stride, spec.padding)


def batchnorm(x, gamma, beta, mode: str, running_mean, running_var, eps: float = BN_EPS,
              momentum: float = BN_MOMENTUM):
    """Per-channel batch normalization of an (N, C, ...) array.

    In ``"train"`` mode the batch statistics are used and the running
    statistics are updated in place; ``"eval"`` mode reads them only.
    Returns ``(out, cache)``; ``cache`` is None in eval mode.
    """
    if x.ndim < 2 or x.shape[1] != gamma.shape[0]:
        raise ShapeError(f"input {x.shape} does not match {gamma.shape[0]} channels")
    axes = (0,) + tuple(range(2, x.ndim))
    bshape = (1, -1) + (1,) * (x.ndim - 2)
    if mode == "train":
        if x.shape[0] < 2:
            raise ValueError("batchnorm in train mode needs a batch of at least 2 samples")
        mean = x.mean(axis=axes)
        centered = x - mean.reshape(bshape)
        var = (centered * centered).mean(axis=axes)
        inv_std = 1.0 / np.sqrt(var + eps)
        xhat = centered * inv_std.reshape(bshape)
        count = x.size // x.shape[1]
        running_mean *= 1.0 - momentum
        running_mean += momentum * mean
        running_var *= 1.0 - momentum
        running_var += momentum * var * (count / (count - 1))
        cache = (xhat, inv_std, gamma)
    elif mode == "eval":
        inv_std = 1.0 / np.sqrt(running_var + eps)
        xhat = (x - running_mean.reshape(bshape)) * inv_std.reshape(bshape)
        cache = None
    else:
        raise ValueError(f"unknown batchnorm mode {mode!r}")
    return xhat * gamma.reshape(bshape) + beta.reshape(bshape), cache


def batchnorm_backward(grad_out, cache):
    """Gradients of train-mode ``batchnorm`` w.r.t. input, gamma and beta."""
    if cache is None:
        raise ValueError("batchnorm_backward needs a train-mode forward cache")
    xhat, inv_std, gamma = cache
    axes = (0,) + tuple(range(2, xhat.ndim))
    bshape = (1, -1) + (1,) * (xhat.ndim - 2)
    count = xhat.size // xhat.shape[1]
    grad_gamma = (grad_out * xhat).sum(axis=axes)
    grad_beta = grad_out.sum(axis=axes)
    scale = (gamma * inv_std / count).reshape(bshape)
    grad_x = scale * (count * grad_out - grad_beta.reshape(bshape) - xhat * grad_gamma.reshape(bshape))
    return grad_x, grad_gamma, grad_beta


def leaky_relu(x, slope: float):
    if not 0.0 < slope < 1.0:
        raise ValueError(f"leaky_relu slope must lie in (0, 1), got {slope}")
    return np.where(x > 0, x, slope * x)


def leaky_relu_backward(grad_out, x, slope: float):
    return np.where(x > 0, grad_out, slope * grad_out)


def relu(x):
    return np.maximum(x, 0)


def relu_backward(grad_out, x):
    return np.where(x > 0, grad_out, 0)


def sigmoid(x):
    # split by sign so exp never overflows
    out = np.empty_like(x, dtype=np.result_type(x, np.float32))
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    # keep the open interval even where the exponential saturates
    info = np.finfo(out.dtype)
    return np.clip(out, info.tiny, np.nextafter(out.dtype.type(1), out.dtype.type(0)))


def sigmoid_backward(grad_out, out):
    return grad_out * out * (1.0 - out)


def tanh(x):
    return np.tanh(x)


def tanh_backward(grad_out, out):
    return grad_out * (1.0 - out * out)


def fully_connected(x, weights, bias):
    """Affine map of an (N, D) batch through (D, M) weights."""
    if x.ndim != 2 or weights.ndim != 2 or x.shape[1] != weights.shape[0]:
        raise ShapeError(f"cannot multiply input {x.shape} by weights {weights.shape}")
    if bias is not None and bias.shape != (weights.shape[1],):
        raise ShapeError(f"bias shape {bias.shape} does not match {weights.shape[1]} outputs")
    out = x @ weights
    if bias is not None:
        out += bias
    return out


def fully_connected_backward(grad_out, x, weights):
    return grad_out @ weights.T, x.T @ grad_out, grad_out.sum(axis=0)
