"""Value types for scores, labels and probability matrices, and CSV I/O.

File conventions (UTF-8, comma separated, header row required):

* binary files carry ``score,label`` columns;
* multiclass files carry ``prob_<class>`` columns, one per class in header
  order, plus an optional ``label`` column holding either the zero-based class
  index or a class name matching one of the ``prob_`` suffixes.

Row numbers in error messages are 1-based data rows (the header is row 0).
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidLabelError,
    MissingColumnError,
    NonBinaryLabelError,
    RowSumOutOfRangeError,
    ValueOutOfRangeError,
)

CLAMP_TOL = 1e-9
SIMPLEX_TOL = 1e-9
RENORMALIZE_WINDOW = (0.99, 1.01)
EXACT_SUM_TOL = 1e-12
PROB_PREFIX = "prob_"


def _frozen(a):
    a = np.array(a, dtype=np.float64 if a.dtype.kind == "f" else a.dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LabeledScores:
    """Binary scores in [0, 1] paired with 0/1 outcomes."""

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64).ravel()
        labels = np.asarray(self.labels).ravel()
        if scores.shape[0] != labels.shape[0]:
            raise DimensionMismatchError(
                f"{scores.shape[0]} scores but {labels.shape[0]} labels"
            )
        if scores.shape[0] == 0:
            raise DimensionMismatchError("LabeledScores needs at least one row")
        ok = (scores >= -CLAMP_TOL) & (scores <= 1.0 + CLAMP_TOL)
        if not ok.all():
            i = int(np.flatnonzero(~ok)[0])
            raise ValueOutOfRangeError(i + 1, float(scores[i]))
        scores = np.clip(scores, 0.0, 1.0)
        as_float = labels.astype(np.float64)
        bad = ~np.isin(as_float, (0.0, 1.0))
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise NonBinaryLabelError(i + 1, labels[i].item())
        object.__setattr__(self, "scores", _frozen(scores))
        object.__setattr__(self, "labels", _frozen(as_float.astype(np.int64)))

    def __len__(self):
        return self.scores.shape[0]

    @property
    def base_rate(self):
        return float(self.labels.mean())


@dataclass(frozen=True)
class ProbabilityMatrix:
    """``n x m`` class-probability matrix whose rows lie on the simplex.

    The constructor is strict: entries must be in [0, 1] and rows must sum to
    one within ``SIMPLEX_TOL``. Use :meth:`normalized` for raw model output.
    """

    values: np.ndarray
    class_names: tuple = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionMismatchError(f"expected a 2-D matrix, got shape {values.shape}")
        n, m = values.shape
        if m < 2:
            raise DimensionMismatchError(f"need at least 2 classes, got {m}")
        if not np.all(np.isfinite(values)) or values.min(initial=0.0) < 0 or values.max(initial=0.0) > 1:
            raise ValueError("probabilities must be finite and within [0, 1]")
        sums = values.sum(axis=1)
        off = np.abs(sums - 1.0) > SIMPLEX_TOL
        if off.any():
            i = int(np.flatnonzero(off)[0])
            raise RowSumOutOfRangeError(i + 1, float(sums[i]))
        names = self.class_names
        if names is None:
            names = tuple(str(j) for j in range(m))
        names = tuple(str(c) for c in names)
        if len(names) != m:
            raise DimensionMismatchError(f"{len(names)} class names for {m} columns")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "class_names", names)

    @classmethod
    def normalized(cls, raw, class_names=None, path=None):
        """Renormalize rows whose sum lies in ``RENORMALIZE_WINDOW``."""
        raw = np.asarray(raw, dtype=np.float64)
        if raw.ndim != 2:
            raise DimensionMismatchError(f"expected a 2-D matrix, got shape {raw.shape}")
        bad = ~np.isfinite(raw) | (raw < -CLAMP_TOL) | (raw > 1.0 + CLAMP_TOL)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise ValueOutOfRangeError(int(i) + 1, float(raw[i, j]), path)
        raw = np.clip(raw, 0.0, 1.0)
        sums = raw.sum(axis=1)
        lo, hi = RENORMALIZE_WINDOW
        off = (sums < lo) | (sums > hi)
        if off.any():
            i = int(np.flatnonzero(off)[0])
            raise RowSumOutOfRangeError(i + 1, float(sums[i]), path)
        # rows already on the simplex to rounding are kept bit-for-bit
        sums = np.where(np.abs(sums - 1.0) <= EXACT_SUM_TOL, 1.0, sums)
        return cls(raw / sums[:, None], class_names)

    @property
    def n_classes(self):
        return self.values.shape[1]

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class MulticlassLabels:
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        labels = np.asarray(self.labels).ravel()
        if labels.size and not np.all(np.equal(np.mod(labels, 1), 0)):
            raise InvalidLabelError("multiclass labels must be integers")
        labels = labels.astype(np.int64)
        m = int(self.n_classes)
        if labels.size and (labels.min() < 0 or labels.max() >= m):
            i = int(np.flatnonzero((labels < 0) | (labels >= m))[0])
            raise InvalidLabelError(f"row {i + 1}: label {labels[i]} outside [0, {m})")
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "n_classes", m)

    def __len__(self):
        return self.labels.shape[0]

    def indicator(self, j):
        return (self.labels == j).astype(np.int64)


def as_matrix(probs):
    """Return the raw ``ndarray`` behind a ProbabilityMatrix or array-like."""
    if isinstance(probs, ProbabilityMatrix):
        return probs.values
    return np.asarray(probs, dtype=np.float64)


def as_label_array(labels):
    if isinstance(labels, (MulticlassLabels, LabeledScores)):
        return labels.labels
    return np.asarray(labels).astype(np.int64)


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def _read_rows(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MissingColumnError("<header>", path) from None
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    return header, rows


def _parse_float(text, row, path):
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"{path}: row {row}: cannot parse {text!r} as a number") from None


def read_header(path):
    return _read_rows(path)[0]


def csv_kind(path):
    """Classify a file as ``"binary"``, ``"multiclass"`` or ``"unknown"``."""
    header = read_header(path)
    if any(h.startswith(PROB_PREFIX) for h in header):
        return "multiclass"
    if "score" in header:
        return "binary"
    return "unknown"


def load_labeled_scores(path, score_column="score", label_column="label"):
    header, rows = _read_rows(path)
    for col in (score_column, label_column):
        if col not in header:
            raise MissingColumnError(col, path)
    si, li = header.index(score_column), header.index(label_column)
    scores = np.empty(len(rows))
    labels = np.empty(len(rows), dtype=np.int64)
    for r, row in enumerate(rows, start=1):
        s = _parse_float(row[si], r, path)
        if not np.isfinite(s) or s < -CLAMP_TOL or s > 1.0 + CLAMP_TOL:
            raise ValueOutOfRangeError(r, s, path)
        lab = _parse_float(row[li], r, path)
        if lab not in (0.0, 1.0):
            raise NonBinaryLabelError(r, row[li], path)
        scores[r - 1] = min(max(s, 0.0), 1.0)
        labels[r - 1] = int(lab)
    return LabeledScores(scores, labels)


def load_scores(path, score_column="score"):
    """Read a score column without requiring labels."""
    header, rows = _read_rows(path)
    if score_column not in header:
        raise MissingColumnError(score_column, path)
    si = header.index(score_column)
    out = np.empty(len(rows))
    for r, row in enumerate(rows, start=1):
        s = _parse_float(row[si], r, path)
        if not np.isfinite(s) or s < -CLAMP_TOL or s > 1.0 + CLAMP_TOL:
            raise ValueOutOfRangeError(r, s, path)
        out[r - 1] = min(max(s, 0.0), 1.0)
    return out


def _resolve_label(text, class_names, row, path):
    text = text.strip()
    if text in class_names:
        return class_names.index(text)
    try:
        value = float(text)
    except ValueError:
        raise InvalidLabelError(f"{path}: row {row}: unknown class {text!r}") from None
    if value != int(value) or not 0 <= value < len(class_names):
        raise InvalidLabelError(f"{path}: row {row}: label {text!r} is not a valid class index")
    return int(value)


def load_probability_matrix(path, label_column="label"):
    """Load a ``prob_<class>`` CSV.

    Returns ``(ProbabilityMatrix, MulticlassLabels or None)``. Labels are read
    when ``label_column`` is given and present; pass ``label_column=None`` to
    ignore labels, or require them by checking the second return value.
    """
    header, rows = _read_rows(path)
    prob_cols = [i for i, h in enumerate(header) if h.startswith(PROB_PREFIX)]
    if len(prob_cols) < 2:
        raise MissingColumnError(f"{PROB_PREFIX}<class> (need at least 2)", path)
    names = tuple(header[i][len(PROB_PREFIX):] for i in prob_cols)
    raw = np.empty((len(rows), len(prob_cols)))
    for r, row in enumerate(rows, start=1):
        for j, c in enumerate(prob_cols):
            raw[r - 1, j] = _parse_float(row[c], r, path)
    probs = ProbabilityMatrix.normalized(raw, names, path=path)
    labels = None
    if label_column is not None and label_column in header:
        li = header.index(label_column)
        labels = MulticlassLabels(
            [_resolve_label(row[li], names, r, path) for r, row in enumerate(rows, start=1)],
            len(names),
        )
    return probs, labels


def load_feature_table(path, label_column="label", feature_columns=None):
    """Read a feature CSV as strings; returns ``(header, features, label_strings)``.

    Numeric conversion is left to the trainer, since categorical models want
    the raw category strings.
    """
    header, rows = _read_rows(path)
    if label_column is not None and label_column not in header:
        raise MissingColumnError(label_column, path)
    if feature_columns is None:
        feature_columns = [h for h in header if h != label_column]
    for col in feature_columns:
        if col not in header:
            raise MissingColumnError(col, path)
    idx = [header.index(c) for c in feature_columns]
    features = np.array([[row[i].strip() for i in idx] for row in rows], dtype=object)
    labels = None
    if label_column is not None:
        li = header.index(label_column)
        labels = np.array([row[li].strip() for row in rows], dtype=object)
    return list(feature_columns), features.reshape(len(rows), len(idx)), labels


# ---------------------------------------------------------------------------
# CSV output (full precision: repr round-trips float64 exactly)
# ---------------------------------------------------------------------------

def write_probability_matrix(path, probs, labels=None, label_column="label"):
    if not isinstance(probs, ProbabilityMatrix):
        probs = ProbabilityMatrix(probs)
    label_values = None if labels is None else as_label_array(labels)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        head = [PROB_PREFIX + c for c in probs.class_names]
        if label_values is not None:
            head.append(label_column)
        w.writerow(head)
        for i, row in enumerate(probs.values):
            out = [repr(float(v)) for v in row]
            if label_values is not None:
                out.append(str(int(label_values[i])))
            w.writerow(out)


def write_scores(path, scores, labels=None, score_column="score", label_column="label"):
    scores = np.asarray(scores, dtype=np.float64)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([score_column] if labels is None else [score_column, label_column])
        for i, s in enumerate(scores):
            if labels is None:
                w.writerow([repr(float(s))])
            else:
                w.writerow([repr(float(s)), str(int(labels[i]))])
