"""Motion encoding: 500 raw frames down to six normalized signals.

Pipeline per snippet: crop the active [1:29, 4:29] window of each 32x32
frame, split it into the top (12x26, shoulders/head) and bottom (17x26,
hips) regions, track each region's center of pressure and mean pressure
per frame, smooth every signal with a centered 5-frame moving average,
then min-max normalize. Position channels share one denominator (the
largest of the four position ranges) so relative movement amplitude
between regions survives; the two pressure channels share theirs.

Output channel order: x_t, y_t, p_t, x_b, y_b, p_b, where x indexes rows
and y columns, 1-based within each region.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .dataset import PressureSnippet
from .validation import as_frames

# Crop window, 1-based inclusive indices into the original 32x32 grid.
CROP_ROW_LO, CROP_ROW_HI = 1, 29
CROP_COL_LO, CROP_COL_HI = 4, 29
TOP_ROWS = 12     # rows 1..12 of the cropped grid
BOTTOM_ROWS = 17  # rows 13..29
N_COLS = CROP_COL_HI - CROP_COL_LO + 1  # 26

CHANNEL_NAMES = ("x_t", "y_t", "p_t", "x_b", "y_b", "p_b")
SMOOTHING_WINDOW = 5


def crop_and_split(frame) -> tuple[np.ndarray, np.ndarray]:
    """Crop one 32x32 frame and split it into (top 12x26, bottom 17x26)."""
    arr = np.asarray(frame, dtype=float)
    if arr.shape[-2:] != (32, 32):
        raise ValueError(f"expected a 32x32 frame, got shape {arr.shape}")
    cropped = arr[..., CROP_ROW_LO - 1:CROP_ROW_HI, CROP_COL_LO - 1:CROP_COL_HI]
    return cropped[..., :TOP_ROWS, :], cropped[..., TOP_ROWS:, :]


def center_of_pressure(region) -> tuple[float, float, float]:
    """Pressure-weighted mean position and mean pressure of one region.

    Row/column indices are 1-based within the region. A fully silent
    region falls back to its geometric center with zero mean pressure.
    """
    arr = np.asarray(region, dtype=float)
    m, n = arr.shape
    total = arr.sum()
    p = total / (m * n)
    if total == 0.0:
        return (m + 1) / 2.0, (n + 1) / 2.0, 0.0
    rows = np.arange(1, m + 1, dtype=float)
    cols = np.arange(1, n + 1, dtype=float)
    x = (rows @ arr.sum(axis=1)) / total
    y = (arr.sum(axis=0) @ cols) / total
    return float(x), float(y), float(p)


def moving_average(signal, window: int = SMOOTHING_WINDOW) -> np.ndarray:
    """Centered moving average; the window truncates at the boundaries.

    Output length equals input length. With window 5 the first and last
    positions average 3 samples, the second and second-to-last 4.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    s = np.asarray(signal, dtype=float)
    if s.ndim != 1:
        raise ValueError("moving_average expects a 1-d signal")
    n = s.shape[0]
    half = window // 2

    def window_mean(t, lo, hi):
        # mean as center + mean deviation: constants pass through exactly,
        # so zero-range channels stay zero-range under normalization
        return s[t] + (s[lo:hi] - s[t]).sum() / (hi - lo)

    if n <= 2 * half:
        return np.array([
            window_mean(t, max(0, t - half), min(n, t + half + 1))
            for t in range(n)
        ])
    out = np.empty(n)
    center = s[half:n - half]
    acc = np.zeros(n - 2 * half)
    for k in range(window):
        acc += s[k:k + n - 2 * half] - center
    out[half:n - half] = center + acc / window
    for t in range(half):
        out[t] = window_mean(t, 0, t + half + 1)
        out[n - 1 - t] = window_mean(n - 1 - t, n - 1 - t - half, n)
    return out


def normalize(raw: np.ndarray) -> np.ndarray:
    """Min-max normalize the six raw channels into [0, 1].

    Each position channel loses its own minimum; all four divide by the
    largest position range. Pressure channels likewise share the larger of
    their two ranges. A zero shared range maps the group to all zeros.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2 or raw.shape[1] != 6:
        raise ValueError(f"expected raw signals of shape (n, 6), got {raw.shape}")
    out = np.empty_like(raw)
    for channels in ((0, 1, 3, 4), (2, 5)):  # positions, then pressures
        ranges = [raw[:, c].max() - raw[:, c].min() for c in channels]
        denom = max(ranges)
        for c in channels:
            if denom == 0.0:
                out[:, c] = 0.0
            else:
                out[:, c] = (raw[:, c] - raw[:, c].min()) / denom
    return out


def raw_signals(frames) -> np.ndarray:
    """Per-frame CoP and mean pressure for both regions, pre-smoothing.

    Returns (n_frames, 6) in channel order x_t, y_t, p_t, x_b, y_b, p_b.
    """
    frames = as_frames(frames)
    top, bottom = crop_and_split(frames)
    out = np.empty((frames.shape[0], 6))
    for offset, region in ((0, top), (3, bottom)):
        m, n = region.shape[1], region.shape[2]
        total = region.sum(axis=(1, 2))
        rows = np.arange(1, m + 1, dtype=float)
        cols = np.arange(1, n + 1, dtype=float)
        wrow = np.einsum("fij,i->f", region, rows)
        wcol = np.einsum("fij,j->f", region, cols)
        silent = total == 0.0
        safe = np.where(silent, 1.0, total)
        out[:, offset + 0] = np.where(silent, (m + 1) / 2.0, wrow / safe)
        out[:, offset + 1] = np.where(silent, (n + 1) / 2.0, wcol / safe)
        out[:, offset + 2] = total / (m * n)
    return out


def encode(snippet) -> np.ndarray:
    """Full pipeline for one snippet (or float frame stack): (500, 6) in [0, 1]."""
    raw = raw_signals(snippet)
    smoothed = np.column_stack([moving_average(raw[:, c]) for c in range(6)])
    return normalize(smoothed)


def cop_overlay(snippet) -> np.ndarray:
    """Per-frame CoP coordinates of both regions in original-grid units.

    Returns (n_frames, 4): top row, top col, bottom row, bottom col,
    1-based in the uncropped 32x32 frame; used to draw position markers
    over the raw frames.
    """
    raw = raw_signals(snippet)
    out = np.empty((raw.shape[0], 4))
    out[:, 0] = raw[:, 0] + (CROP_ROW_LO - 1)
    out[:, 1] = raw[:, 1] + (CROP_COL_LO - 1)
    out[:, 2] = raw[:, 3] + (CROP_ROW_LO - 1) + TOP_ROWS
    out[:, 3] = raw[:, 4] + (CROP_COL_LO - 1)
    return out


class MotionEncoder(BaseEstimator, TransformerMixin):
    """Stateless transformer from pressure snippets to signal matrices.

    `transform` accepts a Dataset, a sequence of PressureSnippet / frame
    stacks, or a single snippet, and returns (n, 500, 6).
    """

    def fit(self, X=None, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        items = self._iter_items(X)
        return np.stack([encode(item) for item in items])

    @staticmethod
    def _iter_items(X):
        from .dataset import Dataset

        if isinstance(X, Dataset):
            return list(X.snippets())
        if isinstance(X, PressureSnippet):
            return [X]
        arr = np.asarray(X) if not isinstance(X, (list, tuple)) else X
        if isinstance(arr, np.ndarray) and arr.ndim == 3:
            return [arr]
        return list(arr)
