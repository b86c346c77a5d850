"""Small input-validation helpers shared across the package."""

import numpy as np


def require_positive(name, value):
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be positive and finite, got {value!r}")
    return value


def require_nonnegative(name, value):
    if not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be non-negative and finite, got {value!r}")
    return value


def require_fraction(name, value):
    if not np.isfinite(value) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def require_count(name, value, minimum=1):
    if int(value) != value or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_channel_matrix(X, min_rows=1):
    """Validate a (num_users, num_antennas) complex channel matrix.

    Scikit-learn's own validators reject complex input, so estimators in this
    package route through this helper instead.
    """
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2:
        raise ValueError(f"channel matrix must be 2-D, got shape {X.shape}")
    if X.shape[0] < min_rows:
        raise ValueError(
            f"channel matrix needs at least {min_rows} users, got {X.shape[0]}"
        )
    if not np.all(np.isfinite(X.view(float))):
        raise ValueError("channel matrix contains non-finite entries")
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0):
        raise ValueError("channel matrix contains an all-zero user vector")
    return X
