"""Cross-validated calibration: train on everything, calibrate on out-of-fold
predictions.

1. train the final model on all rows;
2. split rows into ``k`` folds (stratified by default);
3. for each fold, train on the other folds and predict the held-out rows;
4. stack the out-of-fold predictions in original row order;
5. fit a multiclass calibrator on the stacked matrix;
6. return the final model composed with the calibrator.

Trainers follow a small protocol: ``trainer.train(features, labels, n_classes)``
returns an object with ``predict_proba(features) -> (n, m) ndarray``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import log_softmax, logsumexp, softmax

from .calibrators import SplineConfig, fit_multiclass
from .data import MulticlassLabels, ProbabilityMatrix, as_label_array
from .errors import (
    CalibrationError,
    DegenerateFoldError,
    DimensionMismatchError,
    InvalidOptionsError,
    MissingClassInLabelsError,
    TooManyFoldsError,
    TrainerFailureError,
)
from .folds import stratified_fold_ids

DEFAULT_CV_FOLDS = 5
NB_ENCODINGS = ("categorical", "indicator")


@dataclass(frozen=True)
class CvConfig:
    folds: int = DEFAULT_CV_FOLDS
    seed: int = 0
    stratified: bool = True


def make_stratified_folds(labels, cv=None):
    cv = cv or CvConfig()
    y = as_label_array(labels)
    if cv.stratified:
        return stratified_fold_ids(y, cv.folds, cv.seed)
    # unstratified: treat every row as one class, so rows are simply shuffled and dealt
    return stratified_fold_ids(np.zeros_like(y), cv.folds, cv.seed)


# ---------------------------------------------------------------------------
# built-in models
# ---------------------------------------------------------------------------

def _numeric(features):
    try:
        X = np.asarray(features, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidOptionsError(f"this trainer needs numeric features: {exc}") from exc
    if X.ndim == 1:
        X = X[:, None]
    return X


@dataclass
class MultinomialLogisticModel:
    mean: np.ndarray
    scale: np.ndarray
    weights: np.ndarray
    bias: np.ndarray
    sharpen: float = 1.0

    kind = "multinomial_logistic"

    def logits(self, features):
        Z = (_numeric(features) - self.mean) / self.scale
        return Z @ self.weights + self.bias

    def predict_proba(self, features):
        # p**g / sum(p**g) == softmax(g * logits)
        return softmax(self.sharpen * self.logits(features), axis=1)

    def to_dict(self):
        return {
            "kind": self.kind,
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
            "sharpen": self.sharpen,
        }


@dataclass(frozen=True)
class MultinomialLogisticTrainer:
    """Softmax regression on standardised features, L2 penalty ``l2`` on weights.

    ``sharpen`` raises output probabilities to that power and renormalises,
    which makes a well-calibrated model deliberately overconfident.
    """

    l2: float = 1e-4
    sharpen: float = 1.0
    max_iter: int = 500

    def train(self, features, labels, n_classes):
        X = _numeric(features)
        y = as_label_array(labels)
        n, d = X.shape
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        Z = (X - mean) / scale
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), y] = 1.0

        def objective(theta):
            W = theta[: d * n_classes].reshape(d, n_classes)
            b = theta[d * n_classes :]
            logits = Z @ W + b
            logp = log_softmax(logits, axis=1)
            f = -np.sum(onehot * logp) / n + 0.5 * self.l2 * np.sum(W * W)
            r = (np.exp(logp) - onehot) / n
            gW = Z.T @ r + self.l2 * W
            return f, np.concatenate([gW.ravel(), r.sum(axis=0)])

        res = minimize(
            objective,
            np.zeros(d * n_classes + n_classes),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": self.max_iter, "gtol": 1e-10, "ftol": 1e-14},
        )
        W = res.x[: d * n_classes].reshape(d, n_classes)
        return MultinomialLogisticModel(mean, scale, W, res.x[d * n_classes :].copy(), float(self.sharpen))


@dataclass
class GaussianNBModel:
    log_prior: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    kind = "gaussian_naive_bayes"

    def predict_proba(self, features):
        X = _numeric(features)
        ll = -0.5 * (
            np.log(2 * np.pi * self.variances)[None, :, :]
            + (X[:, None, :] - self.means[None, :, :]) ** 2 / self.variances[None, :, :]
        ).sum(axis=2)
        return softmax(ll + self.log_prior, axis=1)

    def to_dict(self):
        return {
            "kind": self.kind,
            "log_prior": self.log_prior.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }


@dataclass(frozen=True)
class GaussianNBTrainer:
    var_smoothing: float = 1e-9

    def train(self, features, labels, n_classes):
        X = _numeric(features)
        y = as_label_array(labels)
        counts = np.bincount(y, minlength=n_classes).astype(np.float64)
        means = np.zeros((n_classes, X.shape[1]))
        variances = np.ones((n_classes, X.shape[1]))
        floor = self.var_smoothing * max(float(X.var(axis=0).max()), 1e-300)
        for c in range(n_classes):
            rows = X[y == c]
            if rows.shape[0]:
                means[c] = rows.mean(axis=0)
                variances[c] = rows.var(axis=0)
        variances += floor
        with np.errstate(divide="ignore"):
            log_prior = np.log(counts / counts.sum())
        return GaussianNBModel(log_prior, means, variances)


@dataclass
class CategoricalNBModel:
    """``categories[j]`` lists the values of feature ``j`` seen in training;
    ``log_prob[j]`` is the ``(n_classes, len(categories[j]) + 1)`` table of
    smoothed log-likelihoods, the last column serving unseen values."""

    log_prior: np.ndarray
    categories: list
    log_prob: list

    kind = "categorical_naive_bayes"

    def predict_proba(self, features):
        F = np.asarray(features, dtype=object)
        if F.ndim == 1:
            F = F[:, None]
        if F.shape[1] != len(self.categories):
            raise DimensionMismatchError(
                f"model has {len(self.categories)} features, input has {F.shape[1]}"
            )
        ll = np.tile(self.log_prior, (F.shape[0], 1))
        for j, cats in enumerate(self.categories):
            lookup = {v: i for i, v in enumerate(cats)}
            idx = np.array([lookup.get(str(v), len(cats)) for v in F[:, j]], dtype=np.int64)
            ll += self.log_prob[j][:, idx].T
        return np.exp(ll - logsumexp(ll, axis=1, keepdims=True))

    def to_dict(self):
        return {
            "kind": self.kind,
            "log_prior": self.log_prior.tolist(),
            "categories": [list(c) for c in self.categories],
            "log_prob": [t.tolist() for t in self.log_prob],
        }


@dataclass(frozen=True)
class CategoricalNBTrainer:
    """Naive Bayes over categorical features with add-``alpha`` smoothing.

    ``encoding="categorical"`` models each feature as one categorical draw:
    ``P(x_j = v | c) = (count(v, c) + alpha) / (n_c + alpha * V_j)`` where
    ``V_j`` is the number of values of feature ``j`` seen in training; an
    unseen value gets count zero.

    ``encoding="indicator"`` one-hot encodes every feature and treats each
    indicator as an independent Bernoulli with
    ``theta = (count(v, c) + alpha) / (n_c + 2 * alpha)``. Absent indicators
    contribute ``log(1 - theta)``, so correlated features are counted many
    times over and the posteriors are markedly overconfident.

    Class priors are raw frequencies in both cases.
    """

    alpha: float = 1.0
    encoding: str = "categorical"

    def __post_init__(self):
        if self.encoding not in NB_ENCODINGS:
            raise InvalidOptionsError(
                f"encoding must be one of {NB_ENCODINGS}, got {self.encoding!r}"
            )

    def train(self, features, labels, n_classes):
        F = np.asarray(features, dtype=object)
        if F.ndim == 1:
            F = F[:, None]
        y = as_label_array(labels)
        class_counts = np.bincount(y, minlength=n_classes).astype(np.float64)
        with np.errstate(divide="ignore"):
            log_prior = np.log(class_counts / class_counts.sum())
        categories, tables = [], []
        for j in range(F.shape[1]):
            col = np.array([str(v) for v in F[:, j]], dtype=object)
            cats = sorted(set(col))
            lookup = {v: i for i, v in enumerate(cats)}
            idx = np.array([lookup[v] for v in col], dtype=np.int64)
            counts = np.zeros((n_classes, len(cats) + 1))
            np.add.at(counts, (y, idx), 1.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                if self.encoding == "categorical":
                    denom = class_counts[:, None] + self.alpha * len(cats)
                    table = np.log((counts + self.alpha) / denom)
                else:
                    theta = (counts[:, :-1] + self.alpha) / (class_counts[:, None] + 2 * self.alpha)
                    absent = np.log1p(-theta)
                    # column v: indicator v on, every other indicator off;
                    # last column: an unseen value, all indicators off
                    table = np.empty_like(counts)
                    table[:, :-1] = np.log(theta) - absent + absent.sum(axis=1, keepdims=True)
                    table[:, -1] = absent.sum(axis=1)
            tables.append(table)
            categories.append(cats)
        return CategoricalNBModel(log_prior, categories, tables)


TRAINERS = {
    "multinomial_logistic": MultinomialLogisticTrainer,
    "gaussian_naive_bayes": GaussianNBTrainer,
    "categorical_naive_bayes": CategoricalNBTrainer,
}
TRAINER_ALIASES = {"logistic": "multinomial_logistic", "gaussian_nb": "gaussian_naive_bayes",
                   "categorical_nb": "categorical_naive_bayes"}


def builtin_trainer(kind, **options):
    kind = TRAINER_ALIASES.get(kind, kind)
    if kind not in TRAINERS:
        raise InvalidOptionsError(f"unknown trainer {kind!r}; choose from {sorted(TRAINERS)}")
    for name, value in options.items():
        if name == "encoding":
            continue
        if not isinstance(value, (int, float)) or value < 0 or (name == "sharpen" and value == 0):
            raise InvalidOptionsError(f"option {name}={value!r} must be a positive number")
    try:
        return TRAINERS[kind](**options)
    except TypeError as exc:
        raise InvalidOptionsError(f"bad options for {kind}: {exc}") from exc


MODEL_TYPES = {
    "multinomial_logistic": lambda d: MultinomialLogisticModel(
        np.asarray(d["mean"]), np.asarray(d["scale"]), np.asarray(d["weights"]),
        np.asarray(d["bias"]), float(d["sharpen"])),
    "gaussian_naive_bayes": lambda d: GaussianNBModel(
        np.asarray(d["log_prior"]), np.asarray(d["means"]), np.asarray(d["variances"])),
    "categorical_naive_bayes": lambda d: CategoricalNBModel(
        np.asarray(d["log_prior"]), [list(c) for c in d["categories"]],
        [np.asarray(t) for t in d["log_prob"]]),
}


def model_from_dict(d):
    return MODEL_TYPES[d["kind"]](d)


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

@dataclass
class CalibratedModel:
    model: object
    calibrator: object
    oof_predictions: np.ndarray = field(default=None, repr=False)
    fold_ids: np.ndarray = field(default=None, repr=False)

    def predict_uncalibrated(self, features):
        return np.asarray(self.model.predict_proba(features), dtype=np.float64)

    def predict_proba(self, features):
        return self.calibrator.predict(ProbabilityMatrix.normalized(self.predict_uncalibrated(features)))


def _train(trainer, features, labels, n_classes, fold):
    try:
        return trainer.train(features, labels, n_classes)
    except CalibrationError:
        raise
    except Exception as exc:  # third-party trainers can fail any way they like
        raise TrainerFailureError(fold, exc) from exc


def out_of_fold_predictions(features, labels, trainer, cv=None, n_classes=None):
    """Steps 2-4: the ``n x m`` matrix of out-of-fold predictions, row-aligned."""
    cv = cv or CvConfig()
    y = as_label_array(labels)
    m = n_classes or int(y.max()) + 1
    fold_ids = make_stratified_folds(y, cv)
    features = np.asarray(features)
    stacked = np.full((y.shape[0], m), np.nan)
    for k in range(cv.folds):
        held = fold_ids == k
        missing = np.setdiff1d(np.arange(m), np.unique(y[~held]))
        if missing.size:
            raise DegenerateFoldError(
                f"training split for fold {k} lacks class {int(missing[0])}; reduce the fold count"
            )
        model = _train(trainer, features[~held], y[~held], m, k)
        pred = np.asarray(model.predict_proba(features[held]), dtype=np.float64)
        if pred.shape != (int(held.sum()), m):
            raise TrainerFailureError(k, f"predict_proba returned shape {pred.shape}")
        stacked[held] = pred
    return stacked, fold_ids


def cross_validated_calibrate(features, labels, trainer, cv=None, calib_config=None, method="spline"):
    cv = cv or CvConfig()
    y = as_label_array(labels)
    m = labels.n_classes if isinstance(labels, MulticlassLabels) else int(y.max()) + 1
    if y.shape[0] < cv.folds:
        raise TooManyFoldsError(
            f"{cv.folds} folds requested for {y.shape[0]} rows; use --folds <= {y.shape[0]}"
        )
    present = np.bincount(y, minlength=m)
    if np.any(present == 0):
        raise MissingClassInLabelsError(int(np.flatnonzero(present == 0)[0]))

    final = _train(trainer, features, y, m, None)
    stacked, fold_ids = out_of_fold_predictions(features, y, trainer, cv, m)
    probs = ProbabilityMatrix.normalized(stacked)
    calibrator = fit_multiclass(probs, y, calib_config or SplineConfig(seed=cv.seed), method)
    return CalibratedModel(final, calibrator, stacked, fold_ids)
