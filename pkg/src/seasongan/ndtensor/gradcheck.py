"""Central finite-difference gradient checking."""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np


def numerical_gradient(loss_fn: Callable[[], float], array: np.ndarray, index, eps: float) -> float:
    """Central difference of ``loss_fn`` w.r.t. one entry of ``array`` (mutated and restored)."""
    old = array[index]
    array[index] = old + eps
    up = loss_fn()
    array[index] = old - eps
    down = loss_fn()
    array[index] = old
    return (up - down) / (2.0 * eps)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """``|a - n| / max(|a|, |n|)`` over a block of gradient entries.

    Norms are taken over the whole block so entries with tiny true gradient
    do not dominate; a block that is zero on both sides counts as exact.
    """
    diff = np.linalg.norm(analytic - numeric)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    if scale < 1e-12:
        return float(diff)
    return float(diff / scale)


def _crosses_kink(signature: Callable[[], np.ndarray], base: np.ndarray, array: np.ndarray, index,
                  eps: float) -> bool:
    old = array[index]
    try:
        for delta in (eps, -eps):
            array[index] = old + delta
            if not np.array_equal(signature(), base):
                return True
        return False
    finally:
        array[index] = old


def grad_check(
    loss_fn: Callable[[], float],
    arrays: Mapping[str, np.ndarray],
    analytic: Mapping[str, np.ndarray],
    eps: float = 1e-5,
    max_entries: int | None = None,
    seed: int = 0,
    kink_signature: Callable[[], np.ndarray] | None = None,
    max_attempts: int = 400,
) -> tuple[float, dict[str, float]]:
    """Compare analytic gradients against central differences.

    ``arrays`` are the live inputs/parameters that ``loss_fn`` reads; each is
    perturbed in place. With ``max_entries`` set, a seeded random subset of
    entries is checked per array. Returns the worst relative error and the
    per-array errors.

    ``kink_signature`` returns the on/off pattern of every piecewise-linear
    activation. Entries whose +-eps perturbation changes that pattern straddle
    a kink, where central differences are meaningless; they are skipped and
    another entry is drawn (at most ``max_attempts`` draws per array).
    """
    rng = np.random.default_rng(seed)
    base = kink_signature() if kink_signature is not None else None
    errors = {}
    for name, array in arrays.items():
        if array.dtype != np.float64:
            raise TypeError(f"gradient checks need float64, {name} is {array.dtype}")
        grad = analytic[name]
        if grad.shape != array.shape:
            raise ValueError(f"analytic gradient for {name} has shape {grad.shape}, expected {array.shape}")
        want = array.size if max_entries is None else min(max_entries, array.size)
        order = rng.permutation(array.size) if max_entries is not None else np.arange(array.size)
        idx = []
        if base is None:
            candidates = order[:want]
        else:
            candidates = order if max_entries is None else order[:max_attempts]
        for i in candidates:
            ix = np.unravel_index(i, array.shape)
            if base is not None and _crosses_kink(kink_signature, base, array, ix, eps):
                continue
            idx.append(ix)
            if len(idx) == want:
                break
        if not idx:
            raise RuntimeError(f"every sampled entry of {name} straddles an activation kink")
        num = np.array([numerical_gradient(loss_fn, array, ix, eps) for ix in idx])
        ana = np.array([grad[ix] for ix in idx])
        errors[name] = relative_error(ana, num)
    return max(errors.values(), default=0.0), errors
