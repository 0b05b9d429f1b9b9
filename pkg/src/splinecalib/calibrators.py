"""Calibration methods.

``fit_spline_binary`` is the spline calibrator: knots from the (optionally
compact-logit transformed) scores, a natural cubic spline basis, and an
L2-penalised logistic regression whose penalty is picked by cross-validation.
Platt scaling, isotonic regression and clipping are the baselines, and
``fit_multiclass`` calibrates each column of a probability matrix against its
one-vs-rest indicator before renormalising rows.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from . import _kernels
from .data import LabeledScores, ProbabilityMatrix, as_label_array, as_matrix
from .errors import (
    DimensionMismatchError,
    DomainError,
    InvalidPMinError,
    MissingClassInLabelsError,
    SingleClassDataError,
)
from .ridge_glm import (
    DEFAULT_FOLDS,
    PROB_CLIP,
    LambdaSearchReport,
    RidgeLogisticModel,
    default_lambda_grid,
    fit_ridge_logistic,
    select_lambda_cv,
)
from .spline_basis import DEFAULT_MAX_KNOTS, KnotSet, natural_basis, select_knots
from .transforms import DOMAIN_TOL, CompactLogitParams, choose_epsilon, compact_logit_vec

AUTO_ENDPOINT_DISTANCE = 0.01
PLATT_LAMBDA = 1e-8
CLIPPING_GRID = (0.01, 0.001, 0.0001, 0.00001)
UNIFORM_FALLBACK_SUM = 1e-12


@dataclass(frozen=True)
class SplineConfig:
    max_knots: int = DEFAULT_MAX_KNOTS
    lambda_grid: tuple = None
    folds: int = DEFAULT_FOLDS
    seed: int = 0
    use_compact_logit: str = "auto"
    epsilon: float = None
    knot_strategy: str = "quantile"

    def __post_init__(self):
        if self.use_compact_logit not in ("auto", "on", "off"):
            raise ValueError(f"use_compact_logit must be auto|on|off, got {self.use_compact_logit!r}")
        if self.lambda_grid is not None:
            object.__setattr__(self, "lambda_grid", tuple(float(v) for v in self.lambda_grid))

    def grid(self):
        return default_lambda_grid() if self.lambda_grid is None else np.asarray(self.lambda_grid)


def _check_scores(scores):
    scores = np.asarray(scores, dtype=np.float64).ravel()
    ok = (scores >= -DOMAIN_TOL) & (scores <= 1.0 + DOMAIN_TOL)
    if not ok.all():
        raise DomainError(f"scores must lie in [0, 1]; got {scores[~ok][0]!r}")
    return np.clip(scores, 0.0, 1.0)


def _as_labeled(data, labels=None):
    if isinstance(data, LabeledScores):
        return data
    return LabeledScores(data, labels)


def _require_both_classes(data):
    s = int(data.labels.sum())
    if s == 0 or s == len(data):
        raise SingleClassDataError("calibration labels contain a single class")


def compact_logit_wanted(scores):
    """The ``auto`` rule: some non-extreme score within 0.01 of 0 or 1."""
    scores = np.asarray(scores, dtype=np.float64)
    interior = scores[(scores > 0.0) & (scores < 1.0)]
    if interior.size == 0:
        return False
    return bool(np.min(np.minimum(interior, 1.0 - interior)) < AUTO_ENDPOINT_DISTANCE)


# ---------------------------------------------------------------------------
# spline calibration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplineCalibrator:
    knots: KnotSet
    model: RidgeLogisticModel
    transform: CompactLogitParams = None
    lambda_report: LambdaSearchReport = field(default=None, repr=False)

    kind = "spline"

    def __post_init__(self):
        if self.model.coefficients.shape[0] != len(self.knots) - 1:
            raise DimensionMismatchError(
                f"{len(self.knots)} knots need {len(self.knots) - 1} coefficients, "
                f"got {self.model.coefficients.shape[0]}"
            )

    def transform_scores(self, scores):
        scores = _check_scores(scores)
        if self.transform is None:
            return scores
        return compact_logit_vec(scores, self.transform)

    def predict_transformed(self, z):
        """Spline + logistic link applied to already-transformed scores."""
        z = np.asarray(z, dtype=np.float64).ravel()
        if z.size == 0:
            return np.empty(0)
        p = self.model.predict_proba(natural_basis(z, self.knots))
        return np.clip(p, PROB_CLIP, 1.0 - PROB_CLIP)

    def predict(self, scores):
        return self.predict_transformed(self.transform_scores(scores))


def fit_spline_binary(data, config=None, labels=None):
    """Fit a spline calibrator to ``LabeledScores`` (or ``scores, labels=...``)."""
    data = _as_labeled(data, labels)
    config = config or SplineConfig()
    _require_both_classes(data)
    scores = data.scores
    transform = None
    mode = config.use_compact_logit
    if mode == "on" or (mode == "auto" and compact_logit_wanted(scores)):
        transform = (
            CompactLogitParams(config.epsilon) if config.epsilon is not None else choose_epsilon(scores)
        )
        scores = compact_logit_vec(scores, transform)
    knots = select_knots(scores, config.max_knots, config.seed, config.knot_strategy)
    basis = natural_basis(scores, knots)
    report = select_lambda_cv(basis, data.labels, config.grid(), config.folds, config.seed)
    model = fit_ridge_logistic(basis, data.labels, report.chosen)
    return SplineCalibrator(knots, model, transform, report)


def predict_spline(cal, scores):
    return cal.predict(scores)


# ---------------------------------------------------------------------------
# Platt scaling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlattCalibrator:
    slope: float
    intercept: float

    kind = "platt"

    def __post_init__(self):
        if not (np.isfinite(self.slope) and np.isfinite(self.intercept)):
            raise ValueError("Platt parameters must be finite")

    def predict(self, scores):
        scores = _check_scores(scores)
        return expit(self.slope * scores + self.intercept)


def fit_platt(data, labels=None):
    """One-variable logistic regression of outcomes on raw scores.

    A nominal ridge of 1e-8 on the slope keeps separable data finite; there
    is no target smoothing.
    """
    data = _as_labeled(data, labels)
    _require_both_classes(data)
    model = fit_ridge_logistic(data.scores[:, None], data.labels, PLATT_LAMBDA)
    return PlattCalibrator(float(model.coefficients[0]), float(model.intercept))


# ---------------------------------------------------------------------------
# isotonic regression
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IsotonicCalibrator:
    """Step function: ``block_values[i]`` applies between ``boundaries[i-1]``
    and ``boundaries[i]`` (a score exactly on a boundary belongs to the
    right-hand block). The two outer blocks extend to the ends of [0, 1]."""

    boundaries: np.ndarray
    block_values: np.ndarray

    kind = "isotonic"

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=np.float64).ravel()
        v = np.asarray(self.block_values, dtype=np.float64).ravel()
        if v.size != b.size + 1:
            raise DimensionMismatchError(f"{v.size} blocks need {v.size - 1} boundaries, got {b.size}")
        if np.any(np.diff(b) < 0) or np.any(np.diff(v) < 0):
            raise ValueError("isotonic boundaries and block values must be nondecreasing")
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "block_values", v)

    def predict(self, scores):
        scores = _check_scores(scores)
        return self.block_values[np.searchsorted(self.boundaries, scores, side="right")]


def pava(values, weights=None):
    """Nondecreasing least-squares fit to an ordered sequence, per element."""
    values = np.asarray(values, dtype=np.float64).ravel()
    weights = np.ones_like(values) if weights is None else np.asarray(weights, dtype=np.float64)
    if values.size == 0:
        return values.copy()
    means, _, ends = _kernels.pava(values, weights)
    return np.repeat(means, np.diff(np.concatenate(([0], ends))))


def fit_isotonic(data, labels=None):
    data = _as_labeled(data, labels)
    uniq, inverse, counts = np.unique(data.scores, return_inverse=True, return_counts=True)
    sums = np.bincount(inverse, weights=data.labels.astype(np.float64), minlength=uniq.size)
    means, _, ends = _kernels.pava(sums / counts, counts.astype(np.float64))
    starts = np.concatenate(([0], ends[:-1]))
    boundaries = 0.5 * (uniq[ends[:-1] - 1] + uniq[starts[1:]])
    return IsotonicCalibrator(boundaries, np.clip(means, 0.0, 1.0))


# ---------------------------------------------------------------------------
# clipping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClippingCalibrator:
    p_min: float

    kind = "clipping"

    def __post_init__(self):
        if not 0.0 < float(self.p_min) < 0.5:
            raise InvalidPMinError(f"p_min must lie in (0, 1/m), got {self.p_min}")
        object.__setattr__(self, "p_min", float(self.p_min))

    def predict_matrix(self, probs):
        return clip_probabilities(probs, self)

    def predict(self, scores):
        """Binary use: clip the two-column matrix ``[1 - s, s]``."""
        s = _check_scores(scores)
        return clip_probabilities(np.column_stack([1.0 - s, s]), self).values[:, 1]


def clip_probabilities(probs, params):
    p_min = params.p_min if isinstance(params, ClippingCalibrator) else float(params)
    names = probs.class_names if isinstance(probs, ProbabilityMatrix) else None
    values = as_matrix(probs)
    m = values.shape[1]
    if not 0.0 < p_min < 1.0 / m:
        raise InvalidPMinError(f"p_min must lie in (0, 1/{m}), got {p_min}")
    clipped = np.maximum(values, p_min)
    return ProbabilityMatrix(clipped / clipped.sum(axis=1, keepdims=True), names)


def best_clipping(probs, labels, grid=CLIPPING_GRID):
    """Pick the ``p_min`` from ``grid`` with the lowest log-loss on ``(probs, labels)``."""
    from .metrics import log_loss

    scored = [(log_loss(clip_probabilities(probs, p), labels), p) for p in grid]
    loss, p_min = min(scored)
    return ClippingCalibrator(p_min), loss


# ---------------------------------------------------------------------------
# multiclass
# ---------------------------------------------------------------------------

BINARY_FITTERS = {
    "spline": lambda data, config: fit_spline_binary(data, config),
    "platt": lambda data, config: fit_platt(data),
    "isotonic": lambda data, config: fit_isotonic(data),
}


def class_seed(seed, class_index):
    return int(np.random.SeedSequence([int(seed), int(class_index)]).generate_state(1)[0])


@dataclass(frozen=True)
class MulticlassCalibrator:
    per_class: tuple
    class_names: tuple = None

    kind = "multiclass"

    def __post_init__(self):
        per = tuple(self.per_class)
        if len(per) < 2:
            raise DimensionMismatchError("a multiclass calibrator needs at least 2 classes")
        names = self.class_names or tuple(str(i) for i in range(len(per)))
        object.__setattr__(self, "per_class", per)
        object.__setattr__(self, "class_names", tuple(str(c) for c in names))

    @property
    def n_classes(self):
        return len(self.per_class)

    def predict(self, probs):
        return predict_multiclass(self, probs)


def fit_multiclass(probs, labels, config=None, method="spline"):
    """Calibrate each column against its one-vs-rest indicator.

    Every class must occur in ``labels``. Each column's spline fit uses its own
    seed derived from ``(config.seed, class index)`` and, when the transform is
    active, its own epsilon.
    """
    if method not in BINARY_FITTERS:
        raise ValueError(f"unknown per-class method {method!r}")
    config = config or SplineConfig()
    values = as_matrix(probs)
    names = probs.class_names if isinstance(probs, ProbabilityMatrix) else None
    y = as_label_array(labels)
    n, m = values.shape
    if y.shape[0] != n:
        raise DimensionMismatchError(f"{n} probability rows but {y.shape[0]} labels")
    present = np.bincount(y, minlength=m)
    for i in range(m):
        if present[i] == 0:
            raise MissingClassInLabelsError(i)
    if y.max() >= m:
        raise DimensionMismatchError(f"label {y.max()} exceeds the {m} probability columns")
    per_class = []
    for i in range(m):
        data = LabeledScores(values[:, i], (y == i).astype(np.int64))
        per_class.append(BINARY_FITTERS[method](data, replace(config, seed=class_seed(config.seed, i))))
    return MulticlassCalibrator(tuple(per_class), names)


def predict_multiclass(cal, probs):
    names = probs.class_names if isinstance(probs, ProbabilityMatrix) else cal.class_names
    values = as_matrix(probs)
    if values.ndim != 2 or values.shape[1] != cal.n_classes:
        raise DimensionMismatchError(
            f"calibrator expects {cal.n_classes} columns, input has "
            f"{values.shape[1] if values.ndim == 2 else values.ndim}"
        )
    out = np.empty_like(values)
    for j, c in enumerate(cal.per_class):
        out[:, j] = c.predict(values[:, j])
    total = out.sum(axis=1, keepdims=True)
    degenerate = total[:, 0] < UNIFORM_FALLBACK_SUM
    out = np.divide(out, total, out=np.zeros_like(out), where=~degenerate[:, None])
    out[degenerate] = 1.0 / cal.n_classes
    return ProbabilityMatrix(out, names)
