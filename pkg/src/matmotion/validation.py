"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np

from .dataset import FRAME_COUNT, GRID_COLS, GRID_ROWS, PressureSnippet

N_CHANNELS = 6


def as_frames(x) -> np.ndarray:
    """Coerce a snippet or array to a float (500, 32, 32) frame stack."""
    if isinstance(x, PressureSnippet):
        x = x.frames
    arr = np.asarray(x, dtype=float)
    if arr.shape != (FRAME_COUNT, GRID_ROWS, GRID_COLS):
        raise ValueError(
            f"expected frames of shape ({FRAME_COUNT}, {GRID_ROWS}, {GRID_COLS}), "
            f"got {arr.shape}"
        )
    if np.any(arr < 0):
        raise ValueError("pressure values must be nonnegative")
    return arr


def as_signals(x, *, single_ok: bool = True) -> np.ndarray:
    """Coerce to a (n, 500, 6) stack of encoded signal matrices."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 2 and single_ok:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1] != FRAME_COUNT or arr.shape[2] != N_CHANNELS:
        raise ValueError(
            f"expected signals of shape (n, {FRAME_COUNT}, {N_CHANNELS}), got {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError("signals contain non-finite values")
    return arr


def as_feature_matrix(x, n_features: int | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[None]
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d feature matrix, got shape {arr.shape}")
    if n_features is not None and arr.shape[1] != n_features:
        raise ValueError(f"expected {n_features} features, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("features contain non-finite values")
    return arr


def as_binary_labels(y, n_samples: int | None = None) -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ValueError(f"labels must be 1-d, got shape {arr.shape}")
    if n_samples is not None and arr.shape[0] != n_samples:
        raise ValueError(f"expected {n_samples} labels, got {arr.shape[0]}")
    values = set(np.unique(arr).tolist())
    if not values <= {0, 1}:
        raise ValueError(f"labels must be 0 (FM-) or 1 (FM+), got values {sorted(values)}")
    return arr.astype(int)
