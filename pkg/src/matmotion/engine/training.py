"""Loss, optimizer, and the early-stopping training loop."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .layers import LayerSpec
from .network import Network, build_network

PROB_CLAMP = 1e-7


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    batch_size: int = 4
    patience: int = 10
    validation_fraction: float = 1.0 / 6.0
    max_epochs: int = 200
    seed: int = 0
    lstm_activation: str = "relu"  # tanh selectable for sensitivity runs

    def __post_init__(self):
        for name in ("learning_rate", "beta1", "beta2", "epsilon", "batch_size",
                     "patience", "max_epochs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must be in (0, 1)")


def bce_loss(probabilities: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy; probabilities clamped away from {0, 1}."""
    p = np.clip(np.asarray(probabilities, dtype=float).reshape(-1),
                PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = np.asarray(labels, dtype=float).reshape(-1)
    return float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))


def bce_grad(probabilities: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """d(mean BCE)/d(probabilities); zero where the clamp is active."""
    p = np.asarray(probabilities, dtype=float).reshape(-1)
    y = np.asarray(labels, dtype=float).reshape(-1)
    inside = (p > PROB_CLAMP) & (p < 1.0 - PROB_CLAMP)
    pc = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    grad = np.where(inside, (-y / pc + (1.0 - y) / (1.0 - pc)) / p.size, 0.0)
    return grad


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: list[np.ndarray]) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params])


def adam_step(params: list[np.ndarray], grads: list[np.ndarray],
              state: AdamState, config: TrainConfig) -> AdamState:
    """One bias-corrected Adam update, applied to the params in place."""
    state.t += 1
    b1, b2 = config.beta1, config.beta2
    correct1 = 1.0 - b1 ** state.t
    correct2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        mhat = m / correct1
        vhat = v / correct2
        p -= config.learning_rate * mhat / (np.sqrt(vhat) + config.epsilon)
    return state


@dataclass
class TrainedNet:
    """A trained network with its provenance and best-epoch statistics."""

    network: Network
    arch_name: str
    config: TrainConfig
    seed: int
    epochs_run: int
    best_epoch: int
    validation_loss: float
    epoch_losses: list[float] = field(default_factory=list)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return self.network.predict_proba(x)

    def predict(self, x: np.ndarray) -> np.ndarray:
        # FM+ is the positive class; the boundary probability 0.5 maps to FM+
        return (self.predict_proba(x) >= 0.5).astype(int)


def train(specs: list[LayerSpec], x_fit: np.ndarray, y_fit: np.ndarray,
          x_val: np.ndarray, y_val: np.ndarray, config: TrainConfig,
          arch_name: str = "") -> TrainedNet:
    """Mini-batch training with patience-based early stopping.

    Per epoch: shuffle, run Adam over batches, then score BCE on the
    validation set in inference mode. Stops after `patience` consecutive
    epochs without strict improvement, or at `max_epochs`, and restores
    the parameters (including running statistics) of the best epoch.
    """
    if len(x_fit) == 0 or len(x_val) == 0:
        raise ValueError("fit and validation sets must both be non-empty")
    rng = np.random.default_rng(config.seed)
    net = build_network(specs, x_fit.shape[1:], rng, name=arch_name,
                        lstm_activation=config.lstm_activation)
    y_fit = np.asarray(y_fit, dtype=float).reshape(-1)
    y_val = np.asarray(y_val, dtype=float).reshape(-1)

    params = [arr for _, _, arr in net.trainable()]
    state = AdamState.for_params(params)

    best_loss = np.inf
    best_state = net.get_state()
    best_epoch = 0
    stale = 0
    losses: list[float] = []
    epoch = 0
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(x_fit))
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            net.zero_grads()
            probs = net.forward(x_fit[batch], train=True, rng=rng)
            dprob = bce_grad(probs, y_fit[batch]).reshape(probs.shape)
            net.backward(dprob)
            adam_step(params, net.gradients(), state, config)
        val_loss = bce_loss(net.predict_proba(x_val), y_val)
        losses.append(val_loss)
        if val_loss < best_loss:
            best_loss = val_loss
            best_state = net.get_state()
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    net.set_state(best_state)
    return TrainedNet(network=net, arch_name=arch_name, config=config,
                      seed=config.seed, epochs_run=epoch, best_epoch=best_epoch,
                      validation_loss=float(best_loss), epoch_losses=losses)


def config_to_dict(config: TrainConfig) -> dict:
    return asdict(config)
