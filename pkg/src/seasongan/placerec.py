"""Distance matrices, nearest-neighbour matching and precision-recall evaluation."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from PIL import Image

from .features import PRE_STACK, normalize_rows, stack_windows

DEFAULT_TOLERANCE = 2
NEAR_ZERO = 1e-6


def default_thresholds(count: int = 200) -> np.ndarray:
    return np.linspace(0.0, 2.0, count)


@dataclass
class GroundTruth:
    """Query frame ``i`` shows the place of database frame ``alignment[i]``."""

    alignment: np.ndarray
    tolerance: int = DEFAULT_TOLERANCE

    @classmethod
    def identity(cls, count: int, tolerance: int = DEFAULT_TOLERANCE) -> "GroundTruth":
        return cls(np.arange(count), tolerance)

    def is_correct(self, query_frame, db_frame):
        q = np.asarray(query_frame)
        if np.any(q < 0) or np.any(q >= len(self.alignment)):
            raise IndexError(f"query frame outside ground truth of {len(self.alignment)} frames")
        return np.abs(np.asarray(db_frame) - self.alignment[q]) <= self.tolerance


@dataclass
class Match:
    query_frame: int
    db_frame: int
    distance: float


@dataclass
class PRCurve:
    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    sequence_length: int = 1

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.thresholds.tolist(), self.precision.tolist(), self.recall.tolist()))

    def area(self) -> float:
        """Area under precision as a function of recall, following the threshold sweep."""
        order = np.argsort(self.thresholds, kind="stable")
        r, p = self.recall[order], self.precision[order]
        return float(np.sum(np.diff(r) * (p[1:] + p[:-1]) / 2.0))

    def max_precision(self) -> float:
        """Best precision over thresholds that accept at least one correct match."""
        useful = self.recall > 0
        return float(self.precision[useful].max()) if useful.any() else 0.0

    def recall_at_full_precision(self) -> float:
        full = self.precision >= 1.0
        return float(self.recall[full].max()) if full.any() else 0.0

    def max_recall(self) -> float:
        return float(self.recall.max())


def _as_matrix(items) -> np.ndarray:
    if isinstance(items, np.ndarray):
        return np.atleast_2d(items).astype(np.float64)
    return np.stack([np.asarray(getattr(f, "values", f), dtype=np.float64) for f in items])


def distance_matrix(queries, database) -> np.ndarray:
    """Pairwise cosine distances, shape (len(queries), len(database))."""
    q, db = _as_matrix(queries), _as_matrix(database)
    if q.shape[1] != db.shape[1]:
        raise ValueError(f"query features have dimension {q.shape[1]}, database {db.shape[1]}")
    qn, dbn = normalize_rows(q), normalize_rows(db)
    m = 1.0 - qn @ dbn.T
    # 1 - u.v cancels badly near zero; 0.5 |u - v|^2 is exact there (and 0 for identical rows)
    rows, cols = np.nonzero(m < NEAR_ZERO)
    if len(rows):
        diff = qn[rows] - dbn[cols]
        m[rows, cols] = 0.5 * np.einsum("ij,ij->i", diff, diff)
    return np.clip(m, 0.0, 2.0)


def nearest_neighbor(m: np.ndarray) -> list[tuple[int, float]]:
    """Per-row argmin; ties go to the lowest column index."""
    m = np.asarray(m)
    if m.ndim != 2 or 0 in m.shape:
        raise ValueError(f"need a non-empty 2-D distance matrix, got shape {m.shape}")
    best = np.argmin(m, axis=1)
    return [(int(j), float(m[i, j])) for i, j in enumerate(best)]


def evaluate_pr(matches: Sequence[Match], ground_truth: GroundTruth, thresholds=None,
                total_queries: int | None = None, sequence_length: int = 1) -> PRCurve:
    """Precision and recall of the matches accepted at each distance threshold.

    A match is accepted when its distance is at most the threshold and correct
    when its database frame lies within the ground-truth tolerance. Recall
    divides by ``total_queries`` (default: number of matches), so queries that
    never produced a match still count against it. Precision with nothing
    accepted is 1.
    """
    if not matches or (total_queries is not None and total_queries < 1):
        raise ValueError("cannot evaluate an empty query set")
    thresholds = default_thresholds() if thresholds is None else np.asarray(thresholds, dtype=np.float64)
    total = len(matches) if total_queries is None else total_queries
    dist = np.array([m.distance for m in matches])
    correct = ground_truth.is_correct([m.query_frame for m in matches], [m.db_frame for m in matches])
    accepted = dist[None, :] <= thresholds[:, None]
    n_acc = accepted.sum(axis=1)
    n_ok = (accepted & correct[None, :]).sum(axis=1)
    precision = np.where(n_acc > 0, n_ok / np.maximum(n_acc, 1), 1.0)
    return PRCurve(thresholds, precision, n_ok / total, sequence_length)


def match_sequences(query_features: np.ndarray, db_features: np.ndarray, n: int,
                    normalize_order: str = PRE_STACK) -> tuple[list[Match], np.ndarray]:
    """Nearest database window for each query window of length ``n``.

    Frames are indexed by the last frame of their trailing window, so the
    first ``n - 1`` query frames produce no match.
    """
    q = stack_windows(query_features, n, normalize_order)
    db = stack_windows(db_features, n, normalize_order)
    m = distance_matrix(q, db)
    matches = [Match(i + n - 1, j + n - 1, d) for i, (j, d) in enumerate(nearest_neighbor(m))]
    return matches, m


def sweep_sequence_lengths(query_features, db_features, lengths, ground_truth: GroundTruth,
                           thresholds=None, normalize_order: str = PRE_STACK) -> list[PRCurve]:
    """One PR curve per sequence length, recall always relative to all query frames."""
    query_features, db_features = np.asarray(query_features), np.asarray(db_features)
    total = len(query_features)
    curves = []
    for n in lengths:
        if n < 1 or n > min(total, len(db_features)):
            raise ValueError(f"sequence length {n} exceeds the {min(total, len(db_features))} available frames")
        matches, _ = match_sequences(query_features, db_features, n, normalize_order)
        curves.append(evaluate_pr(matches, ground_truth, thresholds, total, n))
    return curves


def heatmap_pixels(m: np.ndarray, clip_max: float) -> np.ndarray:
    """Grayscale rendering: distance 0 is black, ``clip_max`` and above white."""
    if not clip_max > 0:
        raise ValueError(f"clip_max must be positive, got {clip_max}")
    return np.rint(np.clip(np.asarray(m, dtype=np.float64), 0.0, clip_max) / clip_max * 255.0).astype(np.uint8)


def matrix_heatmap_export(m: np.ndarray, clip_max: float, path) -> np.ndarray:
    pixels = heatmap_pixels(m, clip_max)
    Image.fromarray(pixels, mode="L").save(path, format="PNG")
    return pixels


def write_pr_curve(curve: PRCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["threshold", "precision", "recall", "n"])
        for t, p, r in curve.points:
            w.writerow([repr(t), repr(p), repr(r), curve.sequence_length])


def read_pr_curve(path) -> PRCurve:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["threshold", "precision", "recall", "n"]:
            raise ValueError(f"{path}: expected header threshold,precision,recall,n, got {header}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no PR points")
    try:
        data = np.array([[float(x) for x in row[:3]] for row in rows])
        lengths = {int(row[3]) for row in rows}
    except (ValueError, IndexError):
        raise ValueError(f"{path}: malformed PR row") from None
    if len(lengths) != 1:
        raise ValueError(f"{path}: mixed sequence lengths {sorted(lengths)}")
    return PRCurve(data[:, 0], data[:, 1], data[:, 2], lengths.pop())
