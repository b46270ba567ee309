"""The model catalog: every supported architecture name and its structure.

Naming scheme: S* are kernel SVMs on 12 (S1) or 24 (S2) statistical
features; F* are feed-forward networks on those features; C* are 1-d
convolutional networks on the raw 500x6 signals; L* are LSTM networks on
a time-blocked reshape of the signals. Every dense/conv/LSTM stage is
followed by ReLU, batch normalization and 10% dropout; the output stage
is a single sigmoid unit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import FRAME_COUNT
from .engine.layers import (
    BATCH_NORM,
    CONV1D,
    DENSE,
    DROPOUT,
    GLOBAL_AVG_POOL,
    LSTM,
    RELU,
    SIGMOID,
    LayerSpec,
)
from .validation import N_CHANNELS

FAMILY_SVM = "svm"
FAMILY_FFN = "ffn"
FAMILY_CNN = "cnn"
FAMILY_LSTM = "lstm"

INPUT_FEATURES_12 = "features12"
INPUT_FEATURES_24 = "features24"
INPUT_SIGNALS = "signals"

LSTM_STEP_CHOICES = (25, 50, 100)


@dataclass(frozen=True)
class SvmArch:
    name: str
    kernel: str          # "rbf" or "poly"
    degree: int          # poly degree; ignored for rbf
    input_kind: str

    family = FAMILY_SVM

    @property
    def n_features(self) -> int:
        return 12 if self.input_kind == INPUT_FEATURES_12 else 24


@dataclass(frozen=True)
class NetworkArch:
    name: str
    family: str
    layer_specs: tuple[LayerSpec, ...]
    input_kind: str
    lstm_steps: int | None = None

    @property
    def n_features(self) -> int | None:
        if self.input_kind == INPUT_FEATURES_12:
            return 12
        if self.input_kind == INPUT_FEATURES_24:
            return 24
        return None

    def input_shape(self) -> tuple[int, ...]:
        if self.input_kind == INPUT_SIGNALS:
            if self.family == FAMILY_LSTM:
                return (self.lstm_steps, FRAME_COUNT * N_CHANNELS // self.lstm_steps)
            return (FRAME_COUNT, N_CHANNELS)
        return (self.n_features,)


def _block(main: LayerSpec) -> tuple[LayerSpec, ...]:
    return (main, LayerSpec(RELU), LayerSpec(BATCH_NORM), LayerSpec(DROPOUT))


def _dense_block(units: int) -> tuple[LayerSpec, ...]:
    return _block(LayerSpec(DENSE, units=units))


def _conv_block(filters: int, kernel: int) -> tuple[LayerSpec, ...]:
    return _block(LayerSpec(CONV1D, filters=filters, kernel=kernel))


def _lstm_block(units: int, return_sequences: bool) -> tuple[LayerSpec, ...]:
    return _block(LayerSpec(LSTM, units=units, return_sequences=return_sequences))


_OUTPUT = (LayerSpec(DENSE, units=1), LayerSpec(SIGMOID))


def _ffn(name: str, n_inputs: int, fc: tuple[int, ...]) -> NetworkArch:
    specs: tuple[LayerSpec, ...] = ()
    for units in fc:
        specs += _dense_block(units)
    return NetworkArch(
        name=name, family=FAMILY_FFN, layer_specs=specs + _OUTPUT,
        input_kind=INPUT_FEATURES_12 if n_inputs == 12 else INPUT_FEATURES_24,
    )


def _cnn(name: str, convs: tuple[tuple[int, int], ...], fc: tuple[int, ...]
         ) -> NetworkArch:
    specs: tuple[LayerSpec, ...] = ()
    for filters, kernel in convs:
        specs += _conv_block(filters, kernel)
    specs += (LayerSpec(GLOBAL_AVG_POOL),)
    for units in fc:
        specs += _dense_block(units)
    return NetworkArch(name=name, family=FAMILY_CNN, layer_specs=specs + _OUTPUT,
                       input_kind=INPUT_SIGNALS)


def _lstm_net(name: str, steps: int, lstm_units: tuple[int, ...],
              fc: tuple[int, ...]) -> NetworkArch:
    specs: tuple[LayerSpec, ...] = ()
    for i, units in enumerate(lstm_units):
        last = i == len(lstm_units) - 1
        specs += _lstm_block(units, return_sequences=not last)
    for units in fc:
        specs += _dense_block(units)
    return NetworkArch(name=name, family=FAMILY_LSTM,
                       layer_specs=specs + _OUTPUT, input_kind=INPUT_SIGNALS,
                       lstm_steps=steps)


def _svm(name: str, kernel: str, degree: int, n_inputs: int) -> SvmArch:
    return SvmArch(
        name=name, kernel=kernel, degree=degree,
        input_kind=INPUT_FEATURES_12 if n_inputs == 12 else INPUT_FEATURES_24,
    )


_CATALOG_ITEMS = (
    _svm("S1.RBF", "rbf", 0, 12),
    _svm("S1.P1", "poly", 1, 12),
    _svm("S1.P2", "poly", 2, 12),
    _svm("S1.P3", "poly", 3, 12),
    _svm("S2.RBF", "rbf", 0, 24),
    _svm("S2.P1", "poly", 1, 24),
    _svm("S2.P2", "poly", 2, 24),
    _svm("S2.P3", "poly", 3, 24),
    _ffn("F1.1", 12, (100,)),
    _ffn("F1.2", 24, (100,)),
    _ffn("F1.3", 24, (200,)),
    _ffn("F2", 24, (200, 100)),
    _cnn("C1F1.1", ((4, 7),), (100,)),
    _cnn("C1F1.2", ((16, 13),), (100,)),
    _cnn("C1F1.3", ((64, 21),), (100,)),
    _cnn("C1F1.4", ((64, 21),), (200,)),
    _cnn("C1F2", ((64, 21),), (200, 100)),
    _cnn("C2F1", ((4, 7), (16, 13)), (100,)),
    _cnn("C3F1.1", ((4, 7), (16, 13), (64, 21)), (100,)),
    _cnn("C3F1.2", ((4, 7), (16, 13), (64, 21)), (200,)),
    _cnn("C3F2", ((4, 7), (16, 13), (64, 21)), (200, 100)),
    _lstm_net("L1F1.1", 25, (64,), (100,)),
    _lstm_net("L1F1.2", 50, (64,), (100,)),
    _lstm_net("L1F1.3", 100, (64,), (100,)),
    _lstm_net("L1F1.4", 50, (64,), (200,)),
    _lstm_net("L1F2", 50, (64,), (200, 100)),
    _lstm_net("L2F2.1", 50, (64, 32), (200, 100)),
    _lstm_net("L2F2.2", 50, (128, 64), (200, 100)),
)

CATALOG = {arch.name: arch for arch in _CATALOG_ITEMS}
ARCH_NAMES = tuple(arch.name for arch in _CATALOG_ITEMS)


def build_architecture(name: str):
    """Look up a catalog entry; raises on unknown names."""
    try:
        return CATALOG[name]
    except KeyError:
        raise ValueError(
            f"unknown architecture {name!r}; valid names: {', '.join(ARCH_NAMES)}"
        ) from None


def reshape_for_lstm(signals: np.ndarray, steps: int) -> np.ndarray:
    """Block consecutive frames into step vectors, frame-major.

    A (500, 6) signal matrix becomes (steps, 3000/steps); each step vector
    concatenates 500/steps consecutive frames, each frame contributing its
    six channel values in order. Also accepts an (n, 500, 6) stack.
    """
    if steps not in LSTM_STEP_CHOICES:
        raise ValueError(f"steps must be one of {LSTM_STEP_CHOICES}, got {steps}")
    arr = np.asarray(signals, dtype=float)
    if arr.ndim == 2:
        if arr.shape != (FRAME_COUNT, N_CHANNELS):
            raise ValueError(f"expected ({FRAME_COUNT}, {N_CHANNELS}), got {arr.shape}")
        return arr.reshape(steps, -1)
    if arr.ndim == 3:
        if arr.shape[1:] != (FRAME_COUNT, N_CHANNELS):
            raise ValueError(
                f"expected (n, {FRAME_COUNT}, {N_CHANNELS}), got {arr.shape}"
            )
        return arr.reshape(arr.shape[0], steps, -1)
    raise ValueError(f"expected 2-d or 3-d signals, got shape {arr.shape}")


def network_input(arch: NetworkArch, signals=None, features=None) -> np.ndarray:
    """Select and shape the right input array for a network architecture."""
    if arch.input_kind == INPUT_SIGNALS:
        if signals is None:
            raise ValueError(f"{arch.name} needs signal input")
        if arch.family == FAMILY_LSTM:
            return reshape_for_lstm(signals, arch.lstm_steps)
        return np.asarray(signals, dtype=float)
    if features is None:
        raise ValueError(f"{arch.name} needs feature input")
    feats = np.asarray(features, dtype=float)
    if feats.shape[-1] != arch.n_features:
        raise ValueError(
            f"{arch.name} expects {arch.n_features} features, got {feats.shape[-1]}"
        )
    return feats
