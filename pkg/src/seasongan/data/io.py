"""Image loading, resizing and pixel scaling."""

from __future__ import annotations

import logging
import os
import warnings
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .records import ImageRecord

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".ppm", ".pgm"}


def _bilinear_weights(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) interpolation matrix with half-pixel centre alignment."""
    scale = n_in / n_out
    src = (np.arange(n_out) + 0.5) * scale - 0.5
    src = np.clip(src, 0, n_in - 1)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = src - lo
    m = np.zeros((n_out, n_in))
    m[np.arange(n_out), lo] += 1.0 - frac
    m[np.arange(n_out), hi] += frac
    return m


def resize_bilinear(image: np.ndarray, size: int) -> np.ndarray:
    """Resize an (H, W, C) or (H, W) array to ``size`` x ``size``.

    Each output pixel centre maps to ``(i + 0.5) * in / out - 0.5`` in the
    source and takes the bilinear blend of its four neighbours (edge pixels
    are clamped).
    """
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape[:2]
    if (h, w) == (size, size):
        return image.copy()
    rows, cols = _bilinear_weights(h, size), _bilinear_weights(w, size)
    return np.einsum("ih,hw...,jw->ij...", rows, image, cols)


def to_unit_range(image_u8: np.ndarray) -> np.ndarray:
    """Map [0, 255] to [-1, 1]."""
    return np.asarray(image_u8, dtype=np.float64) / 127.5 - 1.0


def to_uint8(pixels: np.ndarray) -> np.ndarray:
    """Map a (3, S, S) array in [-1, 1] to an (S, S, 3) uint8 image."""
    arr = np.clip((np.asarray(pixels) + 1.0) * 127.5, 0, 255)
    return np.rint(arr).astype(np.uint8).transpose(1, 2, 0)


def decode_image(path: str | os.PathLike, size: int) -> np.ndarray:
    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
    resized = np.clip(resize_bilinear(rgb, size), 0, 255)
    return to_unit_range(resized).transpose(2, 0, 1)


def list_images(path: str | os.PathLike) -> list[Path]:
    path = Path(path)
    if not path.is_dir():
        raise FileNotFoundError(f"image directory {path} does not exist")
    return sorted(p for p in path.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def load_image_dir(path: str | os.PathLike, size: int = 64, domain: str = "", stride: int = 1) -> list[ImageRecord]:
    """Load every ``stride``-th image of a directory in filename order.

    Frame indices are positions in the full sorted listing, so a strided load
    keeps its alignment with an unstrided one. Files that fail to decode are
    skipped with a warning.
    """
    if stride < 1:
        raise ValueError(f"stride must be positive, got {stride}")
    files = list_images(path)
    if not files:
        raise ValueError(f"no images found in {path}")
    records, skipped = [], 0
    for index, file in enumerate(files):
        if index % stride:
            continue
        try:
            pixels = decode_image(file, size)
        except (UnidentifiedImageError, OSError, ValueError) as exc:
            skipped += 1
            warnings.warn(f"skipping undecodable image {file}: {exc}", stacklevel=2)
            continue
        records.append(ImageRecord(index, domain, pixels))
    if skipped:
        log.warning("skipped %d undecodable file(s) in %s", skipped, path)
    if not records:
        raise ValueError(f"no decodable images in {path}")
    return records


def save_image(pixels: np.ndarray, path: str | os.PathLike) -> None:
    Image.fromarray(to_uint8(pixels)).save(path)
