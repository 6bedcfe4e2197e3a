"""Input validation helpers used by the estimators and the functional API."""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigurationError

NORMS = ("l1", "l2", "linf")
NORM_TOL = 1e-12
MIN_BASELINE = 1e-9


def check_norm(norm: str) -> str:
    norm = str(norm).lower()
    if norm not in NORMS:
        raise ConfigurationError(f"norm must be one of {NORMS}, got {norm!r}")
    return norm


def vector_norm(x, norm: str = "l2"):
    """Norm along the last axis; works on a single bundle or a stack."""
    x = np.asarray(x, dtype=float)
    if norm == "l2":
        return np.sqrt(np.sum(x * x, axis=-1))
    if norm == "l1":
        return np.sum(np.abs(x), axis=-1)
    if norm == "linf":
        return np.max(np.abs(x), axis=-1) if x.shape[-1] else np.zeros(x.shape[:-1])
    raise ConfigurationError(f"norm must be one of {NORMS}, got {norm!r}")


def as_float_vector(x, name: str, length: int | None = None) -> np.ndarray:
    arr = np.array(x, dtype=float)
    if arr.ndim != 1:
        raise ConfigurationError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ConfigurationError(
            f"{name} has length {arr.shape[0]}, expected {length}"
        )
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} must be finite")
    return arr


def check_bundles(X, n_cues: int) -> np.ndarray:
    """Coerce ``X`` to a 2-d float array of shape (n_samples, n_cues)."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != n_cues:
        raise ConfigurationError(
            f"cue bundles must have shape (n_samples, {n_cues}), got {np.shape(X)}"
        )
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError("cue bundles must be finite")
    return arr


def frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr
