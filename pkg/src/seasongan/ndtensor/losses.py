"""Reconstruction and adversarial losses with their input gradients."""

from __future__ import annotations

import numpy as np

from .tensor import ShapeError

BCE_EPS = 1e-7


def mse_loss(a, b) -> float:
    """Mean of squared element-wise differences."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ShapeError(f"mse_loss operands differ in shape: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.mean(d * d))


def mse_loss_grad(a, b) -> np.ndarray:
    """Gradient of ``mse_loss`` with respect to ``a``."""
    return 2.0 * (a - b) / a.size


def bce_loss(prediction, target) -> float:
    """Binary cross-entropy averaged over elements.

    Predictions are clamped to ``[eps, 1 - eps]`` before taking logs.
    """
    p = np.clip(np.asarray(prediction, dtype=np.float64), BCE_EPS, 1.0 - BCE_EPS)
    t = np.broadcast_to(np.asarray(target, dtype=np.float64), p.shape)
    return float(np.mean(-(t * np.log(p) + (1.0 - t) * np.log1p(-p))))


def bce_logit_grad(prediction, target) -> np.ndarray:
    """Gradient of ``bce_loss(sigmoid(z), t)`` with respect to the logits ``z``.

    The fused form ``(p - t) / N`` stays well conditioned when the sigmoid
    saturates, where chaining through the clamped log would not.
    """
    p = np.asarray(prediction)
    return (p - target) / p.size
