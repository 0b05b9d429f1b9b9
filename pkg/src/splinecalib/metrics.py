"""Log-loss, Brier score, accuracy and reliability-diagram bins.

Both losses clamp probabilities to ``[1e-15, 1 - 1e-15]``, the same constant
the ridge solver uses for held-out losses.

The Brier score here is the multiclass sum ``sum_j (p_ij - [y_i = j])**2``
averaged over rows. For two classes that is twice the common binary
convention ``mean((p_i - y_i)**2)``; :func:`binary_brier_score` gives the
latter.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import LabeledScores, as_label_array, as_matrix
from .errors import DimensionMismatchError
from .ridge_glm import PROB_CLIP

DEFAULT_BINS = 20
RELIABILITY_HEADER = ("bin_lo", "bin_hi", "count", "mean_score", "frac_pos")


def _matrix_and_labels(predicted, labels):
    p = as_matrix(predicted)
    y = as_label_array(labels)
    if p.ndim == 1:
        p = np.column_stack([1.0 - p, p])
    if p.ndim != 2 or p.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"{p.shape[0]} prediction rows but {y.shape[0]} labels")
    if p.shape[0] == 0:
        raise DimensionMismatchError("metrics need at least one row")
    if y.min() < 0 or y.max() >= p.shape[1]:
        raise DimensionMismatchError(f"labels must index the {p.shape[1]} columns")
    return p, y


def log_loss(predicted, labels):
    """Mean ``-log p[i, y_i]``. A 1-D ``predicted`` is the positive-class column."""
    p, y = _matrix_and_labels(predicted, labels)
    true = np.clip(p[np.arange(y.shape[0]), y], PROB_CLIP, 1.0 - PROB_CLIP)
    return float(-np.mean(np.log(true)))


def binary_log_loss(scores, labels):
    s = np.clip(np.asarray(scores, dtype=np.float64), PROB_CLIP, 1.0 - PROB_CLIP)
    y = np.asarray(labels, dtype=np.float64)
    if s.shape != y.shape or s.size == 0:
        raise DimensionMismatchError("scores and labels must be equal-length and nonempty")
    return float(-np.mean(y * np.log(s) + (1.0 - y) * np.log(1.0 - s)))


def brier_score(predicted, labels):
    p, y = _matrix_and_labels(predicted, labels)
    onehot = np.zeros_like(p)
    onehot[np.arange(y.shape[0]), y] = 1.0
    return float(np.mean(np.sum((p - onehot) ** 2, axis=1)))


def binary_brier_score(scores, labels):
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if s.shape != y.shape or s.size == 0:
        raise DimensionMismatchError("scores and labels must be equal-length and nonempty")
    return float(np.mean((s - y) ** 2))


def accuracy(predicted, labels):
    """Fraction of rows whose argmax (lowest index on ties) equals the label."""
    p, y = _matrix_and_labels(predicted, labels)
    return float(np.mean(np.argmax(p, axis=1) == y))


@dataclass(frozen=True)
class ReliabilityBins:
    """Equal-width bins on [0, 1]. ``mean_score``/``frac_pos`` are NaN where
    ``count == 0``; ``empty`` flags those bins."""

    lower: np.ndarray
    upper: np.ndarray
    count: np.ndarray
    mean_score: np.ndarray
    frac_pos: np.ndarray

    @property
    def empty(self):
        return self.count == 0

    def __len__(self):
        return self.count.shape[0]

    def rows(self):
        return list(zip(self.lower, self.upper, self.count, self.mean_score, self.frac_pos))

    def to_csv(self, path):
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(RELIABILITY_HEADER)
            for lo, hi, c, ms, fp in self.rows():
                if c == 0:
                    w.writerow([repr(float(lo)), repr(float(hi)), 0, "", ""])
                else:
                    w.writerow([repr(float(lo)), repr(float(hi)), int(c), repr(float(ms)), repr(float(fp))])


def reliability_bins(data, n_bins=DEFAULT_BINS, labels=None):
    """Bin scores into ``n_bins`` equal-width bins; the last bin includes 1."""
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    if not isinstance(data, LabeledScores):
        data = LabeledScores(data, labels)
    # j / n_bins is exact at representable edges such as 0.6, unlike linspace
    edges = np.arange(n_bins + 1) / n_bins
    idx = np.clip(np.searchsorted(edges, data.scores, side="right") - 1, 0, n_bins - 1)
    count = np.bincount(idx, minlength=n_bins)
    score_sum = np.bincount(idx, weights=data.scores, minlength=n_bins)
    pos_sum = np.bincount(idx, weights=data.labels.astype(np.float64), minlength=n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_score = np.where(count > 0, score_sum / count, np.nan)
        frac_pos = np.where(count > 0, pos_sum / count, np.nan)
    return ReliabilityBins(edges[:-1], edges[1:], count, mean_score, frac_pos)


def pooled_one_vs_rest(probs, labels):
    """Flatten a probability matrix into ``(score, indicator)`` pairs, one per
    cell, for a single pooled reliability diagram."""
    p = as_matrix(probs)
    y = as_label_array(labels)
    onehot = np.zeros_like(p, dtype=np.int64)
    onehot[np.arange(y.shape[0]), y] = 1
    return LabeledScores(p.ravel(), onehot.ravel())
