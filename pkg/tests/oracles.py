"""Brute-force reference implementations used as test oracles."""

import itertools

import numpy as np
from scipy.special import expit


def gradient_descent_logistic(X, y, lam, tol=1e-10, max_iter=2_000_000):
    """Ridge logistic regression by accelerated gradient descent.

    Fixed step ``1/L`` with ``L`` the Hessian's Lipschitz bound, Nesterov
    momentum with adaptive restarts, stopped once the gradient max-norm is
    below ``tol``. Returns ``(intercept, coefficients)``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    Z = np.column_stack([np.ones(len(y)), X])
    pen = np.full(Z.shape[1], lam)
    pen[0] = 0.0
    L = 0.25 * np.linalg.eigvalsh(Z.T @ Z).max() + lam

    def grad(t):
        return Z.T @ (expit(Z @ t) - y) + pen * t

    theta = np.zeros(Z.shape[1])
    v = theta.copy()
    k = 0
    for _ in range(max_iter):
        g = grad(v)
        new = v - g / L
        if np.dot(g, new - theta) > 0:
            # momentum is pointing uphill: restart
            k = 0
            v = theta.copy()
            continue
        k += 1
        v = new + (k - 1) / (k + 2) * (new - theta)
        theta = new
        if np.max(np.abs(grad(theta))) < tol:
            return theta[0], theta[1:]
    raise RuntimeError("gradient descent oracle did not converge")


def exhaustive_isotonic(y, step=1e-3):
    """Least-squares nondecreasing fit by exhaustive search over a value grid.

    Dynamic programming over grid levels: ``best[v]`` is the minimum squared
    error of a monotone prefix ending at level ``v``. Exact over the grid, so
    the answer is within ``step / 2`` of the true optimum per point.
    """
    levels = np.arange(0.0, 1.0 + step / 2, step)
    best = (levels - y[0]) ** 2
    back = []
    for yi in y[1:]:
        run_min = np.minimum.accumulate(best)
        arg = np.zeros(levels.size, dtype=np.int64)
        idx = 0
        for v in range(levels.size):
            if best[v] < best[idx]:
                idx = v
            arg[v] = idx
        back.append(arg)
        best = run_min + (levels - yi) ** 2
    v = int(np.argmin(best))
    path = [v]
    for arg in reversed(back):
        v = int(arg[v])
        path.append(v)
    return levels[np.array(path[::-1])]


def all_label_patterns(n):
    return [np.array(bits, dtype=np.float64) for bits in itertools.product((0, 1), repeat=n)]
