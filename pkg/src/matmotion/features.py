"""Statistical features for the classifiers that use hand-defined inputs.

Per encoded channel: mean and population standard deviation (divide by N).
The 24-value variant appends the same statistics of each channel's first
difference. Order is [mean, std] per channel in signal order, then per
difference channel.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .encoding import CHANNEL_NAMES
from .validation import as_signals

VARIANT_BASE12 = "base12"
VARIANT_FULL24 = "full24"

FEATURE_NAMES_12 = tuple(
    f"{stat}_{ch}" for ch in CHANNEL_NAMES for stat in ("mean", "std")
)
FEATURE_NAMES_24 = FEATURE_NAMES_12 + tuple(
    f"{stat}_d{ch}" for ch in CHANNEL_NAMES for stat in ("mean", "std")
)


def first_difference(signal) -> np.ndarray:
    """d[k] = s[k+1] - s[k], in units per frame; length n-1."""
    s = np.asarray(signal, dtype=float)
    if s.shape[-1] < 2:
        raise ValueError("signal must have at least 2 samples")
    return np.diff(s, axis=-1)


def extract_features(signals, variant: str = VARIANT_FULL24) -> np.ndarray:
    """Feature vector(s) for one (500, 6) matrix or an (n, 500, 6) stack."""
    single = np.asarray(signals).ndim == 2
    x = as_signals(signals)
    parts = [x.mean(axis=1), x.std(axis=1)]
    cols = np.empty((x.shape[0], 12))
    cols[:, 0::2] = parts[0]
    cols[:, 1::2] = parts[1]
    if variant == VARIANT_BASE12:
        out = cols
    elif variant == VARIANT_FULL24:
        d = np.diff(x, axis=1)
        dcols = np.empty((x.shape[0], 12))
        dcols[:, 0::2] = d.mean(axis=1)
        dcols[:, 1::2] = d.std(axis=1)
        out = np.hstack([cols, dcols])
    else:
        raise ValueError(f"variant must be {VARIANT_BASE12!r} or {VARIANT_FULL24!r}")
    return out[0] if single else out


def feature_names(variant: str = VARIANT_FULL24) -> tuple[str, ...]:
    if variant == VARIANT_BASE12:
        return FEATURE_NAMES_12
    if variant == VARIANT_FULL24:
        return FEATURE_NAMES_24
    raise ValueError(f"variant must be {VARIANT_BASE12!r} or {VARIANT_FULL24!r}")


class FeatureExtractor(BaseEstimator, TransformerMixin):
    """Transformer from signal matrices to 12- or 24-value feature rows."""

    def __init__(self, variant: str = VARIANT_FULL24):
        self.variant = variant

    def fit(self, X=None, y=None):
        feature_names(self.variant)  # validates the parameter
        return self

    def transform(self, X) -> np.ndarray:
        return extract_features(as_signals(X), self.variant)

    def get_feature_names_out(self, input_features=None):
        return np.asarray(feature_names(self.variant), dtype=object)
