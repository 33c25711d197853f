"""Discriminator features, unit normalization, sequence stacking and cosine distance."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .nets import Discriminator

PRE_STACK = "pre"
POST_STACK = "post"

FEATURE_MAGIC = b"SGFEAT\x00\x00"
FEATURE_VERSION = 1


@dataclass
class FeatureVector:
    values: np.ndarray
    source_frame: int = 0
    domain: str = ""


@dataclass
class SequenceFeature:
    values: np.ndarray
    start_frame: int
    length: int

    @property
    def end_frame(self) -> int:
        return self.start_frame + self.length - 1


def extract_features(d: Discriminator, images: np.ndarray, batch_size: int = 64) -> np.ndarray:
    """Feature-layer activations (N, feature_dim), eval-mode batchnorm.

    Eval mode makes every row independent of its batch companions, so the
    chunking by ``batch_size`` does not affect the result.
    """
    images = np.asarray(images, dtype=d.dtype)
    if images.ndim == 3:
        images = images[None]
    out = [d.forward(images[i:i + batch_size], train=False)[0] for i in range(0, len(images), batch_size)]
    return np.concatenate(out).astype(np.float64)


def extract_feature(d: Discriminator, image: np.ndarray, source_frame: int = 0, domain: str = "") -> FeatureVector:
    return FeatureVector(extract_features(d, image)[0], source_frame, domain)


def _values(f) -> np.ndarray:
    return np.asarray(f.values if isinstance(f, (FeatureVector, SequenceFeature)) else f, dtype=np.float64)


def normalize(f):
    """Scale to unit Euclidean norm; keeps the input's type."""
    v = _values(f)
    norm = np.linalg.norm(v)
    if not norm > 0:
        raise ValueError("cannot normalize a zero feature vector")
    if isinstance(f, FeatureVector):
        return FeatureVector(v / norm, f.source_frame, f.domain)
    if isinstance(f, SequenceFeature):
        return SequenceFeature(v / norm, f.start_frame, f.length)
    return v / norm


def normalize_rows(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("cannot normalize a zero feature vector")
    return x / norms


def cosine_distance(f1, f2) -> float:
    """``1 - cos(angle)``, in [0, 2]."""
    a, b = _values(f1), _values(f2)
    if a.shape != b.shape:
        raise ValueError(f"feature shapes differ: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if not (na > 0 and nb > 0):
        raise ValueError("cosine distance is undefined for a zero vector")
    d = 1.0 - np.dot(a, b) / (na * nb)
    if d < 1e-6:
        # same near-zero refinement as the distance matrix
        diff = a / na - b / nb
        d = 0.5 * np.dot(diff, diff)
    return float(np.clip(d, 0.0, 2.0))


def stack_sequence(features: Sequence[FeatureVector], n: int, t: int) -> SequenceFeature:
    """Concatenate the features of frames ``t-n+1 .. t`` in time order.

    Members are used as given; normalize them first for the usual pre-stack
    descriptor.
    """
    if n < 1:
        raise ValueError(f"sequence length must be positive, got {n}")
    by_frame = {f.source_frame: f for f in features}
    missing = [i for i in range(t - n + 1, t + 1) if i not in by_frame]
    if missing:
        raise ValueError(f"window {t - n + 1}..{t} is missing frame(s) {missing}")
    values = np.concatenate([_values(by_frame[i]) for i in range(t - n + 1, t + 1)])
    return SequenceFeature(values, t - n + 1, n)


def stack_windows(features: np.ndarray, n: int, normalize_order: str = PRE_STACK) -> np.ndarray:
    """Descriptors of every trailing window of an (N, D) feature sequence.

    Row ``j`` describes frames ``j .. j+n-1`` (ending at frame ``j+n-1``).
    ``"pre"`` unit-normalizes each member before stacking and ``"post"`` does
    not; either way the stacked vector is normalized at the end.
    """
    features = np.asarray(features, dtype=np.float64)
    count = len(features)
    if not 1 <= n <= count:
        raise ValueError(f"sequence length {n} must lie in [1, {count}]")
    if normalize_order == PRE_STACK:
        features = normalize_rows(features)
    elif normalize_order != POST_STACK:
        raise ValueError(f"normalize_order must be 'pre' or 'post', got {normalize_order!r}")
    windows = np.concatenate([features[k:count - n + 1 + k] for k in range(n)], axis=1)
    return normalize_rows(windows)


def write_features(path, features: Iterable[FeatureVector], normalized: bool) -> None:
    """Binary stream: header (magic, version, feature_dim, normalized flag), then records."""
    features = list(features)
    dims = {len(f.values) for f in features}
    if len(dims) > 1:
        raise ValueError(f"features have mixed dimensions {sorted(dims)}")
    dim = dims.pop() if dims else 0
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC + struct.pack("<IIB", FEATURE_VERSION, dim, int(normalized)))
        for f in features:
            label = f.domain.encode()
            fh.write(struct.pack("<qH", f.source_frame, len(label)) + label)
            fh.write(struct.pack("<I", dim) + np.asarray(f.values, "<f8").tobytes())


def read_features(path) -> tuple[list[FeatureVector], bool]:
    blob = Path(path).read_bytes()
    head = len(FEATURE_MAGIC) + 9
    if not blob.startswith(FEATURE_MAGIC) or len(blob) < head:
        raise ValueError(f"{path}: not a feature file")
    version, dim, normalized = struct.unpack("<IIB", blob[len(FEATURE_MAGIC):head])
    if version != FEATURE_VERSION:
        raise ValueError(f"{path}: feature format version {version}, expected {FEATURE_VERSION}")
    out, pos = [], head
    try:
        while pos < len(blob):
            frame, n_label = struct.unpack_from("<qH", blob, pos)
            pos += 10
            label = blob[pos:pos + n_label].decode()
            pos += n_label
            (rec_dim,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            if rec_dim != dim:
                raise ValueError(f"{path}: record dimension {rec_dim} differs from header {dim}")
            values = np.frombuffer(blob, "<f8", dim, pos).astype(np.float64)
            pos += 8 * dim
            out.append(FeatureVector(values, frame, label))
    except struct.error:
        raise ValueError(f"{path}: truncated feature record at byte {pos}") from None
    return out, bool(normalized)


def export_features_text(path, features: Iterable[FeatureVector]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame_index", "domain", "feature_dim", "values"])
        for f in features:
            w.writerow([f.source_frame, f.domain, len(f.values), " ".join(repr(float(v)) for v in f.values)])
