"""Minimal differentiable-layer engine for the catalogued architectures.

Exactly the pieces the model catalog needs: dense, 1-d convolution,
global average pooling, batch normalization, dropout, ReLU, sigmoid and
LSTM layers with reverse-mode gradients, binary cross-entropy, Adam, and
a patience-based early-stopping training loop. Gradients are validated
against central finite differences in the test suite.
"""

from .layers import LayerSpec
from .network import Network, build_network
from .training import (
    AdamState,
    TrainConfig,
    TrainedNet,
    adam_step,
    bce_grad,
    bce_loss,
    train,
)
from .io import load_net, save_net

__all__ = [
    "LayerSpec", "Network", "build_network",
    "TrainConfig", "TrainedNet", "train",
    "adam_step", "AdamState", "bce_loss", "bce_grad",
    "save_net", "load_net",
]
