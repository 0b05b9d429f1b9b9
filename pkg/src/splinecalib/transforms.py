"""The compact logit rescaling of [0, 1] and its epsilon heuristic.

On ``[eps, 1 - eps]`` the map is a logit rescaled so that ``eps``, ``1/2``
and ``1 - eps`` are fixed points; outside that interval it is the identity.
The result is continuous, strictly increasing and maps [0, 1] onto itself,
spreading out scores that crowd the endpoints.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import AllScoresAreOneError, DomainError

DOMAIN_TOL = 1e-12
EPS_CEILING = 0.49


@dataclass(frozen=True)
class CompactLogitParams:
    epsilon: float

    def __post_init__(self):
        e = float(self.epsilon)
        if not 0.0 < e < 0.5:
            raise ValueError(f"epsilon must lie in (0, 0.5), got {e}")
        object.__setattr__(self, "epsilon", e)


def _epsilon(params):
    return params.epsilon if isinstance(params, CompactLogitParams) else CompactLogitParams(params).epsilon


def _check_domain(x):
    x = np.asarray(x, dtype=np.float64)
    ok = (x >= -DOMAIN_TOL) & (x <= 1.0 + DOMAIN_TOL)
    if not ok.all():
        bad = x[~ok].ravel()[0]
        raise DomainError(f"compact logit is defined on [0, 1]; got {bad!r}")
    return np.clip(x, 0.0, 1.0)


def compact_logit(x, params):
    """Scalar compact logit."""
    return float(compact_logit_vec(np.array([x], dtype=np.float64), params)[0])


def compact_logit_vec(xs, params):
    """Element-wise compact logit over a 1-D array."""
    xs = _check_domain(xs).ravel()
    return _kernels.compact_logit(xs, _epsilon(params))


def choose_epsilon(scores):
    """``eps = 10**(r - 1)`` with ``r = floor(log10(min(1 - p)))`` over ``p < 1``."""
    scores = _check_domain(scores).ravel()
    below = scores[scores < 1.0]
    if below.size == 0:
        raise AllScoresAreOneError("every score is exactly 1; epsilon is undefined")
    r = math.floor(math.log10(float(np.min(1.0 - below))))
    return CompactLogitParams(min(10.0 ** (r - 1), EPS_CEILING))
