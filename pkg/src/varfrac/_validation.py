"""Input validation helpers shared by the estimator and the CLI."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array

from .errors import ConfigurationError
from .exterior import ExteriorModel
from .powers import PowerField


def check_points(points, n):
    """2-d float array of points in ``R^n``; a single point is promoted to one row."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1 and n == 1:
        arr = arr[:, None]
    elif arr.ndim == 1 and arr.size == n:
        arr = arr[None, :]
    arr = check_array(arr, ensure_2d=True, dtype=float)
    if arr.shape[1] != n:
        raise ValueError(f"expected points with {n} coordinates, got {arr.shape[1]}")
    return arr


def check_power_field(field, role):
    if not isinstance(field, PowerField):
        raise ConfigurationError(f"{role} must be a PowerField, got {type(field).__name__}")
    if field.role != role:
        raise ConfigurationError(f"expected a field with role {role!r}, got {field.role!r}")
    return field


def check_exterior(exterior):
    if not isinstance(exterior, ExteriorModel):
        raise ConfigurationError(
            f"fit expects an ExteriorModel, got {type(exterior).__name__}")
    return exterior


def check_positive(value, name, integer=False):
    kind = numbers.Integral if integer else numbers.Real
    if isinstance(value, bool) or not isinstance(value, kind) or not value > 0:
        raise ConfigurationError(f"{name} must be a positive {'integer' if integer else 'number'}")
    return value


def check_interior_values(values, mesh):
    arr = np.asarray(values, dtype=float)
    if arr.shape != (mesh.interior.size,):
        raise ConfigurationError(
            f"expected {mesh.interior.size} interior values, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError("interior values must be finite")
    return arr
