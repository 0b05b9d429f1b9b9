"""Knot selection and the natural cubic spline basis.

For knots ``phi_1 < ... < phi_K`` the basis is::

    N_1(x) = 1,  N_2(x) = x,  N_{k+2}(x) = d_k(x) - d_{K-1}(x),  k = 1..K-2
    d_k(x) = ((x - phi_k)_+^3 - (x - phi_K)_+^3) / (phi_K - phi_k)

giving exactly ``K`` columns. Every linear combination is a cubic spline with
continuous second derivative that is linear outside ``[phi_1, phi_K]``.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import NonFiniteInputError, TooFewDistinctValuesError

MIN_KNOTS = 4
DEFAULT_MAX_KNOTS = 200


@dataclass(frozen=True)
class KnotSet:
    knots: np.ndarray

    def __post_init__(self):
        k = np.array(self.knots, dtype=np.float64).ravel()
        if k.shape[0] < MIN_KNOTS:
            raise TooFewDistinctValuesError(
                f"need at least {MIN_KNOTS} knots, got {k.shape[0]}"
            )
        if not np.all(np.isfinite(k)):
            raise NonFiniteInputError(int(np.flatnonzero(~np.isfinite(k))[0]))
        if np.any(np.diff(k) <= 0):
            raise ValueError("knots must be strictly increasing")
        k.setflags(write=False)
        object.__setattr__(self, "knots", k)

    def __len__(self):
        return self.knots.shape[0]


@dataclass(frozen=True)
class BasisMatrix:
    values: np.ndarray
    knots: KnotSet

    @property
    def shape(self):
        return self.values.shape


def select_knots(values, max_knots=DEFAULT_MAX_KNOTS, seed=0, strategy="quantile"):
    """Pick at most ``max_knots`` knots from the distinct entries of ``values``.

    If there are no more than ``max_knots`` distinct values they are all used.
    Otherwise the minimum and maximum are always kept and the rest are either
    evenly spaced order statistics (``"quantile"``, seed ignored) or a uniform
    sample without replacement (``"random"``).
    """
    if max_knots < MIN_KNOTS:
        raise ValueError(f"max_knots must be >= {MIN_KNOTS}, got {max_knots}")
    distinct = np.unique(np.asarray(values, dtype=np.float64))
    if not np.all(np.isfinite(distinct)):
        raise NonFiniteInputError(int(np.flatnonzero(~np.isfinite(distinct))[0]))
    u = distinct.shape[0]
    if u < MIN_KNOTS:
        raise TooFewDistinctValuesError(
            f"{u} distinct values; at least {MIN_KNOTS} are needed for a spline fit"
        )
    if u <= max_knots:
        return KnotSet(distinct)
    if strategy == "quantile":
        # spacing (u-1)/(max_knots-1) > 1, so rounded positions are distinct
        idx = np.round(np.linspace(0, u - 1, max_knots)).astype(np.int64)
    elif strategy == "random":
        rng = np.random.default_rng(seed)
        inner = rng.choice(np.arange(1, u - 1), size=max_knots - 2, replace=False)
        idx = np.concatenate(([0], np.sort(inner), [u - 1]))
    else:
        raise ValueError(f"unknown knot strategy {strategy!r}")
    return KnotSet(distinct[idx])


def natural_basis(x, knots):
    """Expand ``x`` in the natural cubic spline basis; returns ``BasisMatrix``."""
    if not isinstance(knots, KnotSet):
        knots = KnotSet(knots)
    x = np.asarray(x, dtype=np.float64).ravel()
    finite = np.isfinite(x)
    if not finite.all():
        raise NonFiniteInputError(int(np.flatnonzero(~finite)[0]))
    return BasisMatrix(_kernels.natural_basis(x, knots.knots), knots)
