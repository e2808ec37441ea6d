"""Input validation helpers shared by the estimators and functional API."""

import numbers

import numpy as np


def check_sequence(c, name="c", min_length=1):
    """Return `c` as a 1-D complex128 array, rejecting empty or non-finite input."""
    arr = np.asarray(c)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size < min_length:
        raise ValueError(f"{name} must have at least {min_length} samples, got {arr.size}")
    if not np.issubdtype(arr.dtype, np.number):
        raise TypeError(f"{name} must be numeric, got dtype {arr.dtype}")
    arr = arr.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def check_waveforms(X, min_length=1):
    """Validate estimator input.

    Accepts a single waveform (1-D) or a stack of waveforms (2-D, one per
    row). Returns the 2-D complex128 view and a flag telling the caller
    whether to squeeze the result back to 1-D.
    """
    arr = np.asarray(X)
    if arr.ndim == 1:
        return check_sequence(arr, "X", min_length)[None, :], True
    if arr.ndim != 2:
        raise ValueError(f"X must be 1-D or 2-D, got shape {arr.shape}")
    rows = [check_sequence(row, "X row", min_length) for row in arr]
    return np.stack(rows), False


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_random_state(seed):
    """Turn None, an int, or a Generator into a numpy Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
