"""Input validation helpers shared by the estimators and the functional API."""

import numbers

import numpy as np


def check_int(value, name, low=None, high=None):
    """Return ``value`` as a Python int, raising ``ValueError`` if out of range.

    ``low`` and ``high`` are inclusive bounds.
    """
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if low is not None and value < low:
        raise ValueError(f"{name}={value} is below the minimum {low}")
    if high is not None and value > high:
        raise ValueError(f"{name}={value} is above the maximum {high}")
    return value


def check_sequence(x, name="x", length=None):
    """Coerce ``x`` to a 1-D complex128 array with finite samples."""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must not be empty")
    if length is not None and arr.size != length:
        raise ValueError(f"{name} has length {arr.size}, expected {length}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite samples")
    return arr


def check_received(X, l_ra):
    """Coerce received samples to shape ``(n_trials, n_antennas, l_ra)``.

    A 1-D input is one trial on one antenna; a 2-D input is one trial with
    one row per antenna.
    """
    arr = np.asarray(X, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr[None, None, :]
    elif arr.ndim == 2:
        arr = arr[None, :, :]
    elif arr.ndim != 3:
        raise ValueError(f"received samples must have 1 to 3 dimensions, got {arr.ndim}")
    if arr.shape[1] == 0:
        raise ValueError("at least one antenna is required")
    if arr.shape[-1] != l_ra:
        raise ValueError(f"received sequences have length {arr.shape[-1]}, expected {l_ra}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("received samples contain non-finite values")
    return arr
