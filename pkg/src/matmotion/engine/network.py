"""Network container: shape inference, forward/backward, state snapshots."""

from __future__ import annotations

import numpy as np

from . import layers as L
from .layers import Layer, LayerSpec


class Network:
    def __init__(self, layer_objs: list[Layer], specs: list[LayerSpec],
                 input_shape: tuple[int, ...], name: str = ""):
        self.layers = layer_objs
        self.specs = specs
        self.input_shape = tuple(input_shape)  # per-sample shape, no batch axis
        self.name = name

    def forward(self, x: np.ndarray, train: bool = False, rng=None) -> np.ndarray:
        if x.shape[1:] != self.input_shape:
            raise ValueError(
                f"input shape {x.shape[1:]} does not match network input "
                f"{self.input_shape}"
            )
        out = np.asarray(x, dtype=float)
        for layer in self.layers:
            out = layer.forward(out, train, rng)
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("non-finite values in forward pass")
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        grad = dout
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def zero_grads(self):
        for layer in self.layers:
            layer.zero_grads()

    def trainable(self) -> list[tuple[int, str, np.ndarray]]:
        """Ordered (layer index, param name, array) triples for the optimizer."""
        out = []
        for i, layer in enumerate(self.layers):
            for name, arr in layer.params.items():
                out.append((i, name, arr))
        return out

    def gradients(self) -> list[np.ndarray]:
        return [layer.grads[name] for i, layer in enumerate(self.layers)
                for name in layer.params]

    def state_items(self) -> list[tuple[int, str, np.ndarray]]:
        """Trainable params plus buffers (running statistics), in order."""
        out = []
        for i, layer in enumerate(self.layers):
            for name, arr in layer.params.items():
                out.append((i, name, arr))
            for name, arr in layer.buffers.items():
                out.append((i, name, arr))
        return out

    def get_state(self) -> list[np.ndarray]:
        return [arr.copy() for _, _, arr in self.state_items()]

    def set_state(self, state: list[np.ndarray]):
        items = self.state_items()
        if len(items) != len(state):
            raise ValueError("state length mismatch")
        for (_, _, arr), new in zip(items, state):
            if arr.shape != new.shape:
                raise ValueError("state shape mismatch")
            arr[...] = new

    def count_params(self, kinds=None) -> int:
        total = 0
        for layer in self.layers:
            if kinds is not None and layer.kind not in kinds:
                continue
            total += sum(arr.size for arr in layer.params.values())
        return total

    def predict_proba(self, x: np.ndarray, batch_size: int = 256) -> np.ndarray:
        """Inference-mode probabilities, one per sample, chunked for memory."""
        outs = []
        for start in range(0, x.shape[0], batch_size):
            p = self.forward(x[start:start + batch_size], train=False)
            outs.append(p.reshape(-1))
        return np.concatenate(outs) if outs else np.empty(0)


def build_network(specs: list[LayerSpec], input_shape: tuple[int, ...],
                  rng: np.random.Generator, name: str = "",
                  lstm_activation: str = "relu") -> Network:
    """Instantiate layers from specs, inferring shapes along the stack."""
    shape = tuple(input_shape)
    objs: list[Layer] = []
    for spec in specs:
        if spec.kind == L.DENSE:
            if len(shape) != 1:
                raise ValueError(f"dense layer needs flat input, have {shape}")
            objs.append(L.dense(shape[0], spec.units, rng))
            shape = (spec.units,)
        elif spec.kind == L.CONV1D:
            if len(shape) != 2:
                raise ValueError(f"conv1d needs (time, channels) input, have {shape}")
            objs.append(L.conv1d(shape[1], spec.filters, spec.kernel, rng))
            shape = (shape[0], spec.filters)
        elif spec.kind == L.GLOBAL_AVG_POOL:
            if len(shape) != 2:
                raise ValueError(f"pooling needs (time, channels) input, have {shape}")
            objs.append(L.global_avg_pool())
            shape = (shape[1],)
        elif spec.kind == L.BATCH_NORM:
            objs.append(L.batch_norm(shape[-1]))
        elif spec.kind == L.DROPOUT:
            objs.append(L.dropout(spec.rate))
        elif spec.kind == L.RELU:
            objs.append(L.relu())
        elif spec.kind == L.SIGMOID:
            objs.append(L.sigmoid())
        elif spec.kind == L.LSTM:
            if len(shape) != 2:
                raise ValueError(f"lstm needs (time, features) input, have {shape}")
            objs.append(L.lstm(shape[1], spec.units, rng,
                               return_sequences=spec.return_sequences,
                               activation=lstm_activation))
            shape = (shape[0], spec.units) if spec.return_sequences else (spec.units,)
        else:
            raise ValueError(f"unknown layer kind {spec.kind!r}")
    return Network(objs, list(specs), input_shape, name=name)
