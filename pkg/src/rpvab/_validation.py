"""Input checks shared by the estimators."""
from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils import check_array, check_consistent_length, column_or_1d

DEFAULT_SEED = 42


def check_revenue(X, y):
    """Validate per-visitor revenue ``X`` (n,) or (n, 1) against labels ``y``.

    Returns ``(revenue, labels)`` as 1-D arrays.  Revenue must be finite and
    nonnegative; a visitor converts exactly when revenue is positive.
    """
    X = check_array(X, ensure_2d=False, dtype=np.float64, ensure_all_finite=True)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"X must hold a single revenue column, got shape {X.shape}")
        X = X[:, 0]
    y = column_or_1d(y, warn=True)
    check_consistent_length(X, y)
    if np.any(X < 0):
        raise ValueError("revenue per visitor must be nonnegative")
    return X, y


def check_generator(random_state) -> np.random.Generator:
    """Turn ``None``/int/SeedSequence/Generator into a Generator.

    ``None`` maps to :data:`DEFAULT_SEED` so unseeded use stays reproducible.
    """
    if random_state is None:
        return np.random.default_rng(DEFAULT_SEED)
    if isinstance(random_state, np.random.Generator):
        return random_state
    if isinstance(random_state, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(random_state)
    raise ValueError(f"{random_state!r} cannot be used to seed a numpy Generator")


def check_control(control, classes) -> int:
    """Index of the control label within ``classes`` (first class when None)."""
    if control is None:
        return 0
    hits = np.flatnonzero(np.asarray(classes) == control)
    if hits.size == 0:
        raise ValueError(f"control {control!r} is not among the variant labels {list(classes)}")
    return int(hits[0])
