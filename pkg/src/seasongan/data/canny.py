"""Canny edge detection producing the edge domain used for structure translation."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

LUMA = np.array([0.299, 0.587, 0.114])
TIE_TOLERANCE = 1e-9


def to_gray(image: np.ndarray) -> np.ndarray:
    """Luminance of a (3, H, W) image; (H, W) and (1, H, W) inputs pass through."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return image
    if image.ndim == 3 and image.shape[0] == 1:
        return image[0]
    if image.ndim == 3 and image.shape[0] == 3:
        return np.tensordot(LUMA, image, axes=1)
    raise ValueError(f"expected (3, H, W), (1, H, W) or (H, W) image, got {image.shape}")


def non_maximum_suppression(magnitude: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Keep pixels that are maximal along the quantized gradient direction.

    Ties are broken towards the pixel on the positive side, so a symmetric
    ridge two pixels wide thins to exactly one pixel. Differences below
    ``TIE_TOLERANCE`` count as ties so round-off cannot pick the side.
    """
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    sector = np.zeros(angle.shape, dtype=np.int8)          # 0 deg: compare left/right
    sector[(angle >= 22.5) & (angle < 67.5)] = 1            # 45 deg
    sector[(angle >= 67.5) & (angle < 112.5)] = 2           # 90 deg: compare up/down
    sector[(angle >= 112.5) & (angle < 157.5)] = 3          # 135 deg
    padded = np.pad(magnitude, 1)
    h, w = magnitude.shape

    def shifted(dy, dx):
        return padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]

    # row index grows downwards; gy > 0 points down
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    keep = np.zeros(magnitude.shape, dtype=bool)
    for s, (dy, dx) in offsets.items():
        fwd, back = shifted(dy, dx), shifted(-dy, -dx)
        keep |= (sector == s) & (magnitude >= fwd - TIE_TOLERANCE) & (magnitude > back + TIE_TOLERANCE)
    return keep & (magnitude > 0)


def hysteresis(candidates: np.ndarray, magnitude: np.ndarray, low: float, high: float) -> np.ndarray:
    """Strong pixels plus weak pixels 8-connected to a strong one."""
    weak = candidates & (magnitude >= low)
    strong = candidates & (magnitude >= high)
    labels, count = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    if count == 0:
        return np.zeros_like(weak)
    has_strong = np.zeros(count + 1, dtype=bool)
    has_strong[labels[strong]] = True
    has_strong[0] = False
    return has_strong[labels]


def canny_mask(image: np.ndarray, low_threshold: float, high_threshold: float, sigma: float = 1.4) -> np.ndarray:
    """Boolean edge map.

    Thresholds apply to the Sobel gradient magnitude of the smoothed
    luminance, in the same units as the pixel values.
    """
    if not 0 < low_threshold < high_threshold:
        raise ValueError(
            f"need 0 < low_threshold < high_threshold, got {low_threshold}, {high_threshold}"
        )
    gray = to_gray(image)
    smooth = ndimage.gaussian_filter(gray, sigma, mode="nearest") if sigma > 0 else gray
    gx = ndimage.sobel(smooth, axis=1, mode="nearest")
    gy = ndimage.sobel(smooth, axis=0, mode="nearest")
    magnitude = np.hypot(gx, gy)
    candidates = non_maximum_suppression(magnitude, gx, gy)
    return hysteresis(candidates, magnitude, low_threshold, high_threshold)


def canny_edges(image: np.ndarray, low_threshold: float = 0.1, high_threshold: float = 0.3,
                sigma: float = 1.4) -> np.ndarray:
    """Single-channel (1, H, W) edge image with +1 on edges and -1 elsewhere."""
    mask = canny_mask(image, low_threshold, high_threshold, sigma)
    return np.where(mask, 1.0, -1.0)[None]
