"""Train/test split protocol and seeded batching."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence, TypeVar

import numpy as np

from .records import ImageRecord

T = TypeVar("T")


@dataclass
class DatasetSplit:
    test_A: list[ImageRecord]
    test_B: list[ImageRecord]
    train_A: list[ImageRecord]
    train_B: list[ImageRecord]


def split_bounds(length: int) -> tuple[slice, slice, slice]:
    """Index ranges ``(test, train_A, train_B)`` for an aligned sequence pair.

    The first half is held out for testing. Domain A trains on the first half
    of the remainder and domain B on the second, so no place is seen in both
    domains during training.
    """
    half = length // 2
    mid = half + (length - half) // 2
    return slice(0, half), slice(half, mid), slice(mid, length)


def _subsample(items: list[T], ratio: float) -> list[T]:
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"sampling ratio must lie in (0, 1], got {ratio}")
    if ratio == 1.0 or not items:
        return items
    keep = max(1, int(round(len(items) * ratio)))
    idx = np.unique(np.linspace(0, len(items) - 1, keep).round().astype(int))
    return [items[i] for i in idx]


def split_dataset(seq_A: list[ImageRecord], seq_B: list[ImageRecord], sampling_ratio: float = 1.0) -> DatasetSplit:
    if len(seq_A) != len(seq_B):
        raise ValueError(f"sequences must be frame-aligned, got lengths {len(seq_A)} and {len(seq_B)}")
    test, train_a, train_b = split_bounds(len(seq_A))
    return DatasetSplit(
        test_A=seq_A[test],
        test_B=seq_B[test],
        train_A=_subsample(seq_A[train_a], sampling_ratio),
        train_B=_subsample(seq_B[train_b], sampling_ratio),
    )


def epoch_order(n: int, seed: int, epoch: int) -> np.ndarray:
    return np.random.default_rng([seed, epoch]).permutation(n)


def batch_iterator(records: Sequence[T], batch_size: int, seed: int,
                   drop_last: bool = False) -> Iterator[list[T]]:
    """Endless stream of batches, reshuffled every epoch.

    Each epoch visits every record exactly once (the trailing partial batch is
    yielded unless ``drop_last``). The order depends only on ``seed``.
    """
    n = len(records)
    if not 1 <= batch_size <= n:
        raise ValueError(f"batch_size {batch_size} must lie in [1, {n}]")
    epoch = 0
    while True:
        order = epoch_order(n, seed, epoch)
        stop = n - n % batch_size if drop_last else n
        for start in range(0, stop, batch_size):
            yield [records[i] for i in order[start : start + batch_size]]
        epoch += 1
