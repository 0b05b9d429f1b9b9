"""Hot inner loops, in two interchangeable flavours.

Each kernel exists as a vectorised numpy function and as a numba ``@njit``
loop. The numba path is used when numba imports cleanly, unless the
environment variable ``SPLINECALIB_BACKEND`` is set to ``numpy``. Both paths
compute the same quantities; results agree to floating-point rounding
(``tests/test_kernels.py`` pins the tolerance).
"""

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


BACKEND_ENV = "SPLINECALIB_BACKEND"


def _select_backend():
    requested = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if requested not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {requested!r}")
    if requested == "numba" and not HAS_NUMBA:
        return "numpy"
    return requested


# ---------------------------------------------------------------------------
# natural cubic spline basis
# ---------------------------------------------------------------------------

def natural_basis_numpy(x, knots):
    n = x.shape[0]
    k = knots.shape[0]
    last = knots[k - 1]
    out = np.empty((n, k))
    out[:, 0] = 1.0
    out[:, 1] = x
    tail = np.maximum(x - last, 0.0) ** 3
    head = np.maximum(x[:, None] - knots[None, : k - 1], 0.0) ** 3
    d = (head - tail[:, None]) / (last - knots[: k - 1])
    out[:, 2:] = d[:, : k - 2] - d[:, k - 2 : k - 1]
    return out


@njit(cache=True)
def natural_basis_numba(x, knots):
    n = x.shape[0]
    k = knots.shape[0]
    last = knots[k - 1]
    out = np.empty((n, k))
    for i in range(n):
        xi = x[i]
        t = xi - last
        tail = t * t * t if t > 0.0 else 0.0
        t = xi - knots[k - 2]
        h = t * t * t if t > 0.0 else 0.0
        d_last = (h - tail) / (last - knots[k - 2])
        out[i, 0] = 1.0
        out[i, 1] = xi
        for j in range(k - 2):
            t = xi - knots[j]
            h = t * t * t if t > 0.0 else 0.0
            out[i, j + 2] = (h - tail) / (last - knots[j]) - d_last
    return out


# ---------------------------------------------------------------------------
# pool adjacent violators
# ---------------------------------------------------------------------------

def pava_numpy(y, w):
    """Weighted PAVA on an already-ordered sequence.

    Returns ``(block_means, block_weights, block_ends)`` where ``block_ends``
    holds exclusive end indices into ``y``.
    """
    sums = []
    weights = []
    ends = []
    for i in range(y.shape[0]):
        sums.append(y[i] * w[i])
        weights.append(w[i])
        ends.append(i + 1)
        while len(sums) > 1 and sums[-2] / weights[-2] >= sums[-1] / weights[-1]:
            s = sums.pop()
            wt = weights.pop()
            e = ends.pop()
            sums[-1] += s
            weights[-1] += wt
            ends[-1] = e
    sums = np.asarray(sums, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    return sums / weights, weights, np.asarray(ends, dtype=np.int64)


@njit(cache=True)
def pava_numba(y, w):
    n = y.shape[0]
    sums = np.empty(n)
    weights = np.empty(n)
    ends = np.empty(n, dtype=np.int64)
    top = -1
    for i in range(n):
        top += 1
        sums[top] = y[i] * w[i]
        weights[top] = w[i]
        ends[top] = i + 1
        while top > 0 and sums[top - 1] / weights[top - 1] >= sums[top] / weights[top]:
            sums[top - 1] += sums[top]
            weights[top - 1] += weights[top]
            ends[top - 1] = ends[top]
            top -= 1
    m = top + 1
    return sums[:m] / weights[:m], weights[:m].copy(), ends[:m].copy()


# ---------------------------------------------------------------------------
# compact logit
# ---------------------------------------------------------------------------

def compact_logit_numpy(x, eps):
    scale = (1.0 - 2.0 * eps) / (2.0 * np.log((1.0 - eps) / eps))
    out = x.astype(np.float64, copy=True)
    # x < 1 guards eps so small that 1 - eps rounds to 1
    inside = (x >= eps) & (x <= 1.0 - eps) & (x < 1.0)
    xi = x[inside]
    out[inside] = scale * np.log(xi / (1.0 - xi)) + 0.5
    return out


@njit(cache=True)
def compact_logit_numba(x, eps):
    scale = (1.0 - 2.0 * eps) / (2.0 * np.log((1.0 - eps) / eps))
    out = np.empty(x.shape[0])
    hi = 1.0 - eps
    for i in range(x.shape[0]):
        xi = x[i]
        if xi >= eps and xi <= hi and xi < 1.0:
            out[i] = scale * np.log(xi / (1.0 - xi)) + 0.5
        else:
            out[i] = xi
    return out


IMPLEMENTATIONS = {
    "numpy": {
        "natural_basis": natural_basis_numpy,
        "pava": pava_numpy,
        "compact_logit": compact_logit_numpy,
    },
    "numba": {
        "natural_basis": natural_basis_numba,
        "pava": pava_numba,
        "compact_logit": compact_logit_numba,
    },
}

BACKEND = _select_backend()


def get_kernel(name, backend=None):
    return IMPLEMENTATIONS[backend or BACKEND][name]


def natural_basis(x, knots):
    return get_kernel("natural_basis")(
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(knots, dtype=np.float64),
    )


def pava(y, w):
    return get_kernel("pava")(
        np.ascontiguousarray(y, dtype=np.float64),
        np.ascontiguousarray(w, dtype=np.float64),
    )


def compact_logit(x, eps):
    return get_kernel("compact_logit")(np.ascontiguousarray(x, dtype=np.float64), float(eps))
