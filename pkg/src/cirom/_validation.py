"""Input validation helpers shared across the package."""

import numpy as np

from .errors import ParameterShapeError


def as_parameter(mu, n_params=None):
    """Coerce ``mu`` to a 1-D float vector, optionally checking its length."""
    arr = np.atleast_1d(np.asarray(mu, dtype=float))
    if arr.ndim != 1:
        raise ParameterShapeError(f"parameter must be a vector, got shape {arr.shape}")
    if n_params is not None and arr.size != n_params:
        raise ParameterShapeError(
            f"parameter has length {arr.size}, expected {n_params}"
        )
    if not np.all(np.isfinite(arr)):
        raise ParameterShapeError("parameter has non-finite entries")
    return arr


def as_parameter_matrix(points, n_params=None):
    """Coerce to a 2-D array of parameter rows."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if n_params in (None, 1) else arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ParameterShapeError(f"expected a matrix of parameters, got shape {arr.shape}")
    if n_params is not None and arr.shape[1] != n_params:
        raise ParameterShapeError(
            f"parameter rows have length {arr.shape[1]}, expected {n_params}"
        )
    if not np.all(np.isfinite(arr)):
        raise ParameterShapeError("parameter matrix has non-finite entries")
    return arr


def check_positive(value, name):
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value!r}")
    return value
