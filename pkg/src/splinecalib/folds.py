import numpy as np

from .errors import TooManyFoldsError


def stratified_fold_ids(labels, n_folds, seed=0):
    """Assign each row to one of ``n_folds`` folds, stratified by label.

    Rows are shuffled within each class, classes are laid end to end, and the
    concatenated order is dealt round-robin. Each class therefore spreads over
    the folds with sizes differing by at most one, and so do the fold totals.
    """
    labels = np.asarray(labels).ravel()
    n = labels.shape[0]
    if n_folds < 2:
        raise ValueError(f"need at least 2 folds, got {n_folds}")
    if n_folds > n:
        raise TooManyFoldsError(
            f"{n_folds} folds requested for {n} rows; use --folds <= {n}"
        )
    rng = np.random.default_rng(seed)
    order = []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        order.append(members[rng.permutation(members.shape[0])])
    order = np.concatenate(order)
    fold_ids = np.empty(n, dtype=np.int64)
    fold_ids[order] = np.arange(n) % n_folds
    return fold_ids
