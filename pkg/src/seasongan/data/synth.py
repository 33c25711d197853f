"""Procedural two-season train journey.

A long strip of landscape (sky, hills, ground, track, trees, buildings,
poles) is generated once as a class-label map; frame ``i`` is a window of it at
a steadily advancing offset, optionally pausing to mimic a stationary train.
Each domain paints the same label map with its own palette, brightness and
texture noise. The palettes share per-class luminance up to a constant shift,
which keeps the edge structure of paired frames identical while the colours
differ. Texture grain is drawn per domain but carries no luminance.
"""

from __future__ import annotations

import numpy as np

from .canny import LUMA
from .records import ImageRecord

SKY, HILLS, GROUND, TRACK, FOLIAGE, BUILDING, POLE = range(7)

# per-class luminance in [0, 1]; adjacent classes differ by >= 0.1
LUMINANCE = np.array([0.80, 0.30, 0.55, 0.68, 0.15, 0.42, 0.04])

# hue before luminance matching
SUMMER_HUES = np.array([
    [0.45, 0.65, 0.95],  # sky
    [0.20, 0.45, 0.25],  # hills
    [0.35, 0.70, 0.20],  # ground
    [0.60, 0.50, 0.40],  # track
    [0.10, 0.40, 0.10],  # foliage
    [0.75, 0.20, 0.15],  # building
    [0.35, 0.22, 0.10],  # pole
])
WINTER_HUES = np.array([
    [0.80, 0.82, 0.88],
    [0.85, 0.87, 0.95],
    [0.92, 0.92, 0.96],
    [0.55, 0.55, 0.60],
    [0.30, 0.38, 0.36],
    [0.45, 0.25, 0.25],
    [0.20, 0.20, 0.22],
])
WINTER_BRIGHTNESS = 0.08
TEXTURE_AMPLITUDE = 0.06
PALETTE_MARGIN = 0.03


def _palette(hues: np.ndarray, shift: float) -> np.ndarray:
    """Recolour ``hues`` so class luminance equals ``LUMINANCE + shift``."""
    target = LUMINANCE + shift
    pal = hues - (hues @ LUMA)[:, None] + target[:, None]
    lo, hi = PALETTE_MARGIN, 1.0 - PALETTE_MARGIN
    # pull saturated colours towards grey until they fit, leaving room for grain
    for _ in range(100):
        over = (pal.max(axis=1) > hi) | (pal.min(axis=1) < lo)
        if not over.any():
            break
        pal[over] = 0.8 * pal[over] + 0.2 * target[over, None]
    return np.clip(pal, 0.0, 1.0)


def domain_palettes() -> dict[str, np.ndarray]:
    return {"A": _palette(SUMMER_HUES, 0.0), "B": _palette(WINTER_HUES, WINTER_BRIGHTNESS)}


def _smooth_profile(rng, width: int, amplitude: float, n_waves: int = 6) -> np.ndarray:
    x = np.arange(width)
    prof = np.zeros(width)
    for _ in range(n_waves):
        period = rng.uniform(40, 400)
        prof += rng.uniform(0.3, 1.0) * np.sin(2 * np.pi * x / period + rng.uniform(0, 2 * np.pi))
    return amplitude * prof / n_waves


def render_world(rng: np.random.Generator, width: int, size: int) -> np.ndarray:
    """Class-label map of shape (size, width)."""
    s = size / 64.0
    rows = np.arange(size)[:, None]
    horizon = np.round(size * 0.58 + _smooth_profile(rng, width, 10 * s)).astype(int)
    hill_top = horizon - np.round(np.abs(_smooth_profile(rng, width, 30 * s, 4)) + 2 * s).astype(int)
    labels = np.full((size, width), SKY, dtype=np.int8)
    labels[rows >= hill_top[None, :]] = HILLS
    labels[rows >= horizon[None, :]] = GROUND
    track_top = int(round(size * 0.86))
    labels[track_top:, :] = TRACK

    x = int(rng.integers(0, 8))
    while x < width:
        kind = rng.choice(3, p=[0.45, 0.3, 0.25])
        base = int(horizon[min(x, width - 1)] + rng.integers(0, int(6 * s) + 1))
        base = min(base, track_top - 1)
        if kind == 0:  # tree: trunk and a crown
            trunk_h = int(rng.integers(int(4 * s), int(10 * s) + 1))
            crown_w = int(rng.integers(int(6 * s), int(16 * s) + 1))
            crown_h = int(rng.integers(int(8 * s), int(24 * s) + 1))
            cx = x + crown_w // 2
            labels[max(base - trunk_h, 0) : base, max(cx - 1, 0) : cx + 1] = POLE
            top = base - trunk_h - crown_h
            for r in range(max(top, 0), base - trunk_h):
                half = int(round((r - top + 1) / crown_h * crown_w / 2))
                labels[r, max(cx - half, 0) : cx + half + 1] = FOLIAGE
            x += crown_w
        elif kind == 1:  # building with a darker roof band
            bw = int(rng.integers(int(8 * s), int(22 * s) + 1))
            bh = int(rng.integers(int(8 * s), int(28 * s) + 1))
            labels[max(base - bh, 0) : base, x : x + bw] = BUILDING
            roof = max(base - bh, 0)
            labels[roof : roof + max(1, int(2 * s)), x : x + bw] = POLE
            x += bw
        else:  # pole
            ph = int(rng.integers(int(12 * s), int(34 * s) + 1))
            labels[max(base - ph, 0) : base, x : x + max(1, int(2 * s))] = POLE
            x += max(1, int(2 * s))
        x += int(rng.integers(int(3 * s), int(20 * s) + 1))
    return labels


def frame_offsets(rng: np.random.Generator, count: int, step: int, stationary_runs: int) -> np.ndarray:
    """Window offset per frame; pauses repeat an offset for several frames."""
    moving = np.ones(count, dtype=int)
    moving[0] = 0
    for _ in range(stationary_runs):
        length = int(rng.integers(3, 9))
        start = int(rng.integers(1, max(2, count - length)))
        moving[start : start + length] = 0
    return np.cumsum(moving) * step


def synthesize_paired_domains(seed: int, count: int, size: int = 64, step: int | None = None,
                              stationary_runs: int = 0):
    """Render ``count`` aligned frames in two appearance domains.

    Returns ``(seq_A, seq_B)``, lists of ``ImageRecord`` whose frame ``i``
    shows the same place. ``step`` is the scroll distance per frame in pixels
    (default ``size // 20``).
    """
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    step = max(1, size // 20) if step is None else step
    rng = np.random.default_rng(seed)
    offsets = frame_offsets(rng, count, step, stationary_runs)
    width = int(offsets[-1]) + size
    labels = render_world(rng, width, size)
    palettes = domain_palettes()
    sequences = {}
    for d, (name, palette) in enumerate(palettes.items()):
        tex_rng = np.random.default_rng([seed, 1000 + d])
        grain = tex_rng.uniform(-1.0, 1.0, (size, width, 3))
        # chroma-only grain: luminance, and hence edge structure, is untouched
        grain -= (grain @ LUMA)[..., None]
        # projected components lie in [-2, 2]; scale so no pixel leaves [0, 1]
        headroom = np.minimum(palette, 1.0 - palette).min(axis=1)
        amplitude = np.minimum(TEXTURE_AMPLITUDE, headroom) / 2.0
        world = palette[labels] + amplitude[labels][..., None] * grain  # (size, width, 3)
        world = np.clip(world, 0.0, 1.0) * 2.0 - 1.0
        world = np.ascontiguousarray(world.transpose(2, 0, 1))  # (3, size, width)
        sequences[name] = [ImageRecord(i, name, world[:, :, o : o + size].copy()) for i, o in enumerate(offsets)]
    return sequences["A"], sequences["B"]
