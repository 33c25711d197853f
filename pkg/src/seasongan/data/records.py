from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ImageRecord:
    frame_index: int
    domain: str
    pixels: np.ndarray  # (3, S, S), values in [-1, 1]


def stack_pixels(records: list[ImageRecord], dtype=np.float64) -> np.ndarray:
    """Pixels of a record list as one (N, C, S, S) array."""
    if not records:
        raise ValueError("no records to stack")
    return np.stack([r.pixels for r in records]).astype(dtype, copy=False)


def frame_indices(records: list[ImageRecord]) -> np.ndarray:
    return np.array([r.frame_index for r in records], dtype=np.int64)
