"""Sklearn-style classifier over the catalogued network architectures."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .architectures import (
    FAMILY_SVM,
    NetworkArch,
    build_architecture,
    network_input,
)
from .engine import TrainConfig, train
from .validation import as_binary_labels


class NetworkClassifier(BaseEstimator, ClassifierMixin):
    """Train one catalogued network architecture, sklearn-style.

    Parameters mirror the training configuration. `fit` takes signal
    stacks (n, 500, 6) for convolutional/LSTM architectures and feature
    matrices for feed-forward ones; LSTM inputs are re-blocked
    automatically. When no validation data is supplied, the trailing
    `validation_fraction` of a seeded shuffle is held out.

    Attributes
    ----------
    trained_ : TrainedNet with the best-epoch parameters.
    classes_ : array([0, 1]); 1 is FM+, the positive class.
    """

    def __init__(self, arch: str = "C1F1.1", learning_rate: float = 0.001,
                 beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-7,
                 batch_size: int = 4, patience: int = 10,
                 validation_fraction: float = 1.0 / 6.0, max_epochs: int = 200,
                 seed: int = 0, lstm_activation: str = "relu"):
        self.arch = arch
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.batch_size = batch_size
        self.patience = patience
        self.validation_fraction = validation_fraction
        self.max_epochs = max_epochs
        self.seed = seed
        self.lstm_activation = lstm_activation

    def _config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate, beta1=self.beta1, beta2=self.beta2,
            epsilon=self.epsilon, batch_size=self.batch_size,
            patience=self.patience, validation_fraction=self.validation_fraction,
            max_epochs=self.max_epochs, seed=self.seed,
            lstm_activation=self.lstm_activation,
        )

    def _arch(self) -> NetworkArch:
        arch = build_architecture(self.arch)
        if arch.family == FAMILY_SVM:
            raise ValueError(
                f"{self.arch} is an SVM catalog entry; use KernelSVC with "
                "svm_grid_search instead"
            )
        return arch

    def _shape_input(self, X) -> np.ndarray:
        arch = self._arch()
        X = np.asarray(X, dtype=float)
        if X.ndim == 3:
            return network_input(arch, signals=X)
        return network_input(arch, features=X)

    def fit(self, X, y, X_val=None, y_val=None):
        arch = self._arch()
        Xn = self._shape_input(X)
        yn = as_binary_labels(y, Xn.shape[0])
        if X_val is not None:
            Xv = self._shape_input(X_val)
            yv = as_binary_labels(y_val, Xv.shape[0])
        else:
            rng = np.random.default_rng(self.seed)
            order = rng.permutation(len(Xn))
            n_val = max(1, int(round(len(Xn) * self.validation_fraction)))
            if n_val >= len(Xn):
                raise ValueError("not enough samples to hold out validation data")
            val_idx, fit_idx = order[:n_val], order[n_val:]
            Xv, yv = Xn[val_idx], yn[val_idx]
            Xn, yn = Xn[fit_idx], yn[fit_idx]
        self.trained_ = train(list(arch.layer_specs), Xn, yn, Xv, yv,
                              self._config(), arch_name=arch.name)
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, X) -> np.ndarray:
        p = self.trained_.predict_proba(self._shape_input(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        # boundary rule: probability exactly 0.5 classifies as FM+
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)
