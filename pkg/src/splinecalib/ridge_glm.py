"""L2-penalised logistic regression and cross-validated choice of the penalty.

The fitted objective is::

    F(b, beta) = -sum_i [y_i log p_i + (1 - y_i) log(1 - p_i)] + lam / 2 * ||beta||^2
    p_i = sigmoid(b + x_i . beta)

with the intercept ``b`` unpenalised. The solver is damped Newton (IRLS) with
step halving.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.linalg import blas
from scipy.special import expit

from .errors import (
    DegenerateFoldError,
    DimensionMismatchError,
    NonConvergenceError,
    NonFiniteInputError,
    SingleClassDataError,
    SingularUpdateError,
)
from .folds import stratified_fold_ids
from .spline_basis import BasisMatrix

PROB_CLIP = 1e-15
MAX_ITER = 100
GRAD_RTOL = 1e-8
TIE_TOL = 1e-12
DEFAULT_FOLDS = 5


def default_lambda_grid(lo=1e-4, hi=1e4, count=25):
    return np.logspace(np.log10(lo), np.log10(hi), count)


def clamped_log_loss(p, y):
    """Mean binary log-loss with ``p`` clamped to ``[1e-15, 1 - 1e-15]``."""
    p = np.clip(p, PROB_CLIP, 1.0 - PROB_CLIP)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log1p(-p)))


@dataclass(frozen=True)
class RidgeLogisticModel:
    intercept: float
    coefficients: np.ndarray
    lam: float
    n_iter: int = 0

    def decision_function(self, X):
        X = _design(X)
        return self.intercept + X @ self.coefficients

    def predict_proba(self, X):
        return expit(self.decision_function(X))


@dataclass(frozen=True)
class LambdaSearchReport:
    grid: np.ndarray
    cv_losses: np.ndarray
    chosen: float
    fold_count: int
    seed: int
    fold_losses: np.ndarray = field(default=None, repr=False)

    def table(self):
        """Rows of ``(lambda, mean_cv_log_loss, is_chosen)``."""
        return [(float(l), float(c), bool(l == self.chosen)) for l, c in zip(self.grid, self.cv_losses)]


def _design(X):
    """Non-constant design columns: a BasisMatrix loses its all-ones column."""
    if isinstance(X, BasisMatrix):
        return X.values[:, 1:]
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    return X


def _objective(eta, y, beta, lam):
    # softplus(eta) - y * eta is the per-row negative log-likelihood
    return float(np.sum(np.logaddexp(0.0, eta) - y * eta) + 0.5 * lam * (beta @ beta))


def penalized_objective(intercept, coefficients, X, y, lam):
    X = _design(X)
    y = np.asarray(y, dtype=np.float64)
    coefficients = np.asarray(coefficients, dtype=np.float64)
    return _objective(intercept + X @ coefficients, y, coefficients, lam)


def penalized_gradient(intercept, coefficients, X, y, lam):
    """Gradient ``(d/db, d/dbeta)`` of the penalised objective."""
    X = _design(X)
    y = np.asarray(y, dtype=np.float64)
    coefficients = np.asarray(coefficients, dtype=np.float64)
    r = expit(intercept + X @ coefficients) - y
    return float(r.sum()), X.T @ r + lam * coefficients


def fit_ridge_logistic(X, y, lam, init=None, max_iter=MAX_ITER):
    """Minimise the penalised logistic objective for a fixed ``lam > 0``.

    ``init`` is an optional ``(intercept, coefficients)`` warm start.
    Convergence requires the gradient max-norm to drop to
    ``1e-8 * max(1, objective)``.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    X = _design(X)
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != X.shape[0]:
        raise DimensionMismatchError(f"{X.shape[0]} design rows but {y.shape[0]} labels")
    bad = ~np.isfinite(X).all(axis=1)
    if bad.any():
        raise NonFiniteInputError(int(np.flatnonzero(bad)[0]))
    return _fit_augmented(_augment(X), y, float(lam), init, max_iter)


def _augment(X):
    Z = np.empty((X.shape[0], X.shape[1] + 1))
    Z[:, 0] = 1.0
    Z[:, 1:] = X
    return Z


def _fit_augmented(Z, y, lam, init, max_iter):
    d = Z.shape[1] - 1
    pen = np.full(d + 1, lam)
    pen[0] = 0.0
    if init is None:
        rate = np.clip(y.mean(), 1e-6, 1 - 1e-6)
        theta = np.zeros(d + 1)
        theta[0] = np.log(rate / (1 - rate))
    else:
        theta = np.concatenate(([init[0]], np.asarray(init[1], dtype=np.float64)))

    eta = Z @ theta
    f = _objective(eta, y, theta[1:], lam)
    for it in range(max_iter + 1):
        p = expit(eta)
        g = Z.T @ (p - y) + pen * theta
        gmax = float(np.max(np.abs(g)))
        if gmax <= GRAD_RTOL * max(1.0, f):
            return RidgeLogisticModel(float(theta[0]), theta[1:].copy(), lam, it)
        if it == max_iter:
            break
        step = _newton_step(Z, p, pen, g)
        slope = float(g @ step)
        t = 1.0
        for _ in range(60):
            cand = theta - t * step
            eta_c = Z @ cand
            f_c = _objective(eta_c, y, cand[1:], lam)
            if f_c <= f - 1e-4 * t * slope:
                break
            # near the optimum the decrease can fall below rounding of f
            if t == 1.0 and abs(f_c - f) <= 1e-13 * max(1.0, abs(f)):
                break
            t *= 0.5
        else:
            raise SingularUpdateError(
                f"step halving failed at iteration {it} (gradient max-norm {gmax:.3e})"
            )
        theta, eta, f = cand, eta_c, f_c
    raise NonConvergenceError(max_iter, gmax)


def _newton_step(Z, p, pen, g):
    A = Z * np.sqrt(p * (1.0 - p))[:, None]
    # upper triangle of A^T A; cho_factor only reads that half
    H = blas.dsyrk(1.0, A.T)
    H[np.diag_indices_from(H)] += pen
    jitter = 0.0
    scale = max(1.0, float(np.max(np.diag(H))))
    for _ in range(8):
        try:
            c = linalg.cho_factor(H if jitter == 0 else H + jitter * np.eye(H.shape[0]), check_finite=False)
            step = linalg.cho_solve(c, g, check_finite=False)
            if np.all(np.isfinite(step)):
                return step
        except linalg.LinAlgError:
            pass
        jitter = scale * 1e-14 if jitter == 0 else jitter * 100
    raise SingularUpdateError("Hessian is not positive definite even after damping")


def _check_binary(y):
    y = np.asarray(y).ravel()
    s = y.sum()
    if s == 0 or s == y.shape[0]:
        raise SingleClassDataError("labels contain a single class")
    return y


def select_lambda_cv(X, y, grid=None, folds=DEFAULT_FOLDS, seed=0):
    """Choose the penalty by stratified k-fold CV on held-out log-loss.

    The reported loss for each ``lam`` is the mean over folds of the held-out
    mean log-loss. Ties (within ``TIE_TOL``) go to the largest ``lam``.
    """
    X = _design(X)
    y = _check_binary(y).astype(np.float64)
    if y.shape[0] != X.shape[0]:
        raise DimensionMismatchError(f"{X.shape[0]} design rows but {y.shape[0]} labels")
    bad = ~np.isfinite(X).all(axis=1)
    if bad.any():
        raise NonFiniteInputError(int(np.flatnonzero(bad)[0]))
    grid = default_lambda_grid() if grid is None else np.asarray(grid, dtype=np.float64).ravel()
    if grid.size == 0 or np.any(grid <= 0):
        raise ValueError("lambda grid must be nonempty and strictly positive")
    grid = np.sort(grid)
    fold_ids = stratified_fold_ids(y, folds, seed)

    losses = np.empty((grid.size, folds))
    for k in range(folds):
        train = fold_ids != k
        yt = y[train]
        if yt.min() == yt.max():
            raise DegenerateFoldError(
                f"training split for fold {k} has a single class; reduce the fold count"
            )
        Zt, Xh, yh = _augment(X[train]), X[~train], y[~train]
        warm = None
        # largest lambda first: each solution warm-starts the next, less smooth, fit
        for j in range(grid.size - 1, -1, -1):
            model = _fit_augmented(Zt, yt, float(grid[j]), warm, MAX_ITER)
            warm = (model.intercept, model.coefficients)
            losses[j, k] = clamped_log_loss(model.predict_proba(Xh), yh)

    mean = losses.mean(axis=1)
    best = mean.min()
    chosen = grid[np.flatnonzero(mean <= best + TIE_TOL)[-1]]
    return LambdaSearchReport(grid, mean, float(chosen), int(folds), int(seed), losses)
