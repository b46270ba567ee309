"""Layer implementations with explicit forward/backward passes.

Conventions: batches are the leading axis; sequence tensors are
(batch, time, channels), flat tensors (batch, features). Every layer
caches what its backward pass needs during a training-mode forward.
All math is float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DENSE = "dense"
CONV1D = "conv1d"
GLOBAL_AVG_POOL = "global_avg_pool"
BATCH_NORM = "batch_norm"
DROPOUT = "dropout"
RELU = "relu"
SIGMOID = "sigmoid"
LSTM = "lstm"

KINDS = (DENSE, CONV1D, GLOBAL_AVG_POOL, BATCH_NORM, DROPOUT, RELU, SIGMOID, LSTM)

BN_EPS = 1e-3
BN_MOMENTUM = 0.99
DROPOUT_RATE = 0.1


@dataclass(frozen=True)
class LayerSpec:
    """Declarative layer description used by the architecture catalog."""

    kind: str
    units: int | None = None            # DENSE, LSTM
    filters: int | None = None          # CONV1D
    kernel: int | None = None           # CONV1D, odd
    rate: float = DROPOUT_RATE          # DROPOUT
    return_sequences: bool = False      # LSTM

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind == CONV1D and (self.kernel is None or self.kernel % 2 == 0):
            raise ValueError(f"conv kernel must be odd, got {self.kernel}")
        if not 0.0 <= self.rate < 1.0:
            raise ValueError(f"dropout rate must be in [0, 1), got {self.rate}")


def _glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    """Base layer: ordered params/grads plus optional non-trainable buffers."""

    kind: str = ""

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, train: bool, rng) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def zero_grads(self):
        self.grads = {name: np.zeros_like(arr) for name, arr in self.params.items()}


class Dense(Layer):
    kind = DENSE

    def __init__(self, n_in: int, units: int, rng: np.random.Generator):
        super().__init__()
        self.params["W"] = _glorot(rng, (n_in, units), n_in, units)
        self.params["b"] = np.zeros(units)
        self.zero_grads()

    def forward(self, x, train, rng):
        if train:
            self._x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, dy):
        self.grads["W"] += self._x.T @ dy
        self.grads["b"] += dy.sum(axis=0)
        return dy @ self.params["W"].T


class Conv1D(Layer):
    """Temporal convolution, stride 1, zero padding preserving length."""

    kind = CONV1D

    def __init__(self, n_in: int, filters: int, kernel: int, rng: np.random.Generator):
        super().__init__()
        if kernel % 2 == 0:
            raise ValueError("kernel length must be odd for same-length output")
        self.kernel = kernel
        self.n_in = n_in
        self.params["W"] = _glorot(
            rng, (kernel, n_in, filters), kernel * n_in, kernel * filters
        )
        self.params["b"] = np.zeros(filters)
        self.zero_grads()

    def _columns(self, x):
        pad = (self.kernel - 1) // 2
        xp = np.pad(x, ((0, 0), (pad, pad), (0, 0)))
        # (B, T, C, K) view -> (B, T, K, C) -> (B, T, K*C)
        win = np.lib.stride_tricks.sliding_window_view(xp, self.kernel, axis=1)
        cols = np.ascontiguousarray(win.transpose(0, 1, 3, 2))
        return cols.reshape(x.shape[0], x.shape[1], self.kernel * self.n_in)

    def forward(self, x, train, rng):
        cols = self._columns(x)
        wmat = self.params["W"].reshape(self.kernel * self.n_in, -1)
        if train:
            self._cols = cols
            self._in_shape = x.shape
        return cols @ wmat + self.params["b"]

    def backward(self, dy):
        b, t, _ = dy.shape
        kc = self.kernel * self.n_in
        wmat = self.params["W"].reshape(kc, -1)
        flat_cols = self._cols.reshape(b * t, kc)
        self.grads["W"] += (flat_cols.T @ dy.reshape(b * t, -1)).reshape(
            self.params["W"].shape
        )
        self.grads["b"] += dy.sum(axis=(0, 1))
        dcols = (dy @ wmat.T).reshape(b, t, self.kernel, self.n_in)
        pad = (self.kernel - 1) // 2
        dxp = np.zeros((b, t + 2 * pad, self.n_in))
        for k in range(self.kernel):
            dxp[:, k:k + t, :] += dcols[:, :, k, :]
        return dxp[:, pad:pad + t, :]


class GlobalAvgPool(Layer):
    """Average over the whole time axis: (B, T, C) -> (B, C)."""

    kind = GLOBAL_AVG_POOL

    def forward(self, x, train, rng):
        if train:
            self._in_shape = x.shape
        return x.mean(axis=1)

    def backward(self, dy):
        b, t, c = self._in_shape
        return np.broadcast_to(dy[:, None, :] / t, (b, t, c)).copy()


class BatchNorm(Layer):
    """Per-channel normalization over batch (and time, for sequences).

    Training normalizes by batch statistics and updates running estimates
    with momentum 0.99; inference uses the frozen running statistics.
    """

    kind = BATCH_NORM

    def __init__(self, channels: int):
        super().__init__()
        self.params["gamma"] = np.ones(channels)
        self.params["beta"] = np.zeros(channels)
        self.buffers["running_mean"] = np.zeros(channels)
        self.buffers["running_var"] = np.ones(channels)
        self.zero_grads()

    def forward(self, x, train, rng):
        axes = tuple(range(x.ndim - 1))
        if train:
            mu = x.mean(axis=axes)
            var = x.var(axis=axes)
            self.buffers["running_mean"] *= BN_MOMENTUM
            self.buffers["running_mean"] += (1.0 - BN_MOMENTUM) * mu
            self.buffers["running_var"] *= BN_MOMENTUM
            self.buffers["running_var"] += (1.0 - BN_MOMENTUM) * var
        else:
            mu = self.buffers["running_mean"]
            var = self.buffers["running_var"]
        ivar = 1.0 / np.sqrt(var + BN_EPS)
        xhat = (x - mu) * ivar
        if train:
            self._axes = axes
            self._xhat = xhat
            self._ivar = ivar
            self._n = int(np.prod([x.shape[a] for a in axes]))
        return self.params["gamma"] * xhat + self.params["beta"]

    def backward(self, dy):
        axes, xhat, ivar, n = self._axes, self._xhat, self._ivar, self._n
        self.grads["gamma"] += (dy * xhat).sum(axis=axes)
        self.grads["beta"] += dy.sum(axis=axes)
        dxhat = dy * self.params["gamma"]
        term1 = n * dxhat
        term2 = dxhat.sum(axis=axes, keepdims=True)
        term3 = xhat * (dxhat * xhat).sum(axis=axes, keepdims=True)
        return (ivar / n) * (term1 - term2 - term3)


class Dropout(Layer):
    """Inverted dropout; identity at inference."""

    kind = DROPOUT

    def __init__(self, rate: float = DROPOUT_RATE):
        super().__init__()
        self.rate = rate
        self.fixed_mask = None  # test hook: freeze the mask for gradient checks

    def forward(self, x, train, rng):
        if not train or self.rate == 0.0:
            self._mask = None
            return x
        if self.fixed_mask is not None:
            mask = self.fixed_mask
        else:
            if rng is None:
                raise ValueError("training-mode dropout requires an RNG stream")
            mask = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        self._mask = mask
        return x * mask

    def backward(self, dy):
        if self._mask is None:
            return dy
        return dy * self._mask


class ReLU(Layer):
    kind = RELU

    def forward(self, x, train, rng):
        if train:
            self._mask = x > 0
        return np.maximum(x, 0.0)

    def backward(self, dy):
        return dy * self._mask


def _sigmoid(x):
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Sigmoid(Layer):
    kind = SIGMOID

    def forward(self, x, train, rng):
        y = _sigmoid(x)
        if train:
            self._y = y
        return y

    def backward(self, dy):
        return dy * self._y * (1.0 - self._y)


class Lstm(Layer):
    """Single LSTM layer unrolled over time.

    Gate order in the packed weight matrices is input, forget, candidate,
    output. Sigmoid gates throughout; the candidate and cell-output
    activation is ReLU by default (tanh selectable for sensitivity runs).
    """

    kind = LSTM

    def __init__(self, n_in: int, units: int, rng: np.random.Generator,
                 return_sequences: bool = False, activation: str = "relu"):
        super().__init__()
        if activation not in ("relu", "tanh"):
            raise ValueError(f"activation must be relu or tanh, got {activation!r}")
        self.units = units
        self.return_sequences = return_sequences
        self.activation = activation
        self.params["W"] = _glorot(rng, (n_in, 4 * units), n_in, 4 * units)
        self.params["R"] = _glorot(rng, (units, 4 * units), units, 4 * units)
        self.params["b"] = np.zeros(4 * units)
        self.zero_grads()

    def _act(self, z):
        return np.maximum(z, 0.0) if self.activation == "relu" else np.tanh(z)

    def _act_grad(self, z, a):
        # derivative of the activation given pre-activation z and value a
        return (z > 0).astype(float) if self.activation == "relu" else 1.0 - a * a

    def forward(self, x, train, rng):
        b, t, _ = x.shape
        u = self.units
        w, r, bias = self.params["W"], self.params["R"], self.params["b"]
        zx = x @ w  # (B, T, 4U), input contribution for all steps at once
        h = np.zeros((b, u))
        c = np.zeros((b, u))
        hs = np.empty((b, t, u))
        if train:
            cache = []
        for step in range(t):
            z = zx[:, step] + h @ r + bias
            zi, zf, zg, zo = (z[:, :u], z[:, u:2 * u], z[:, 2 * u:3 * u], z[:, 3 * u:])
            gi = _sigmoid(zi)
            gf = _sigmoid(zf)
            gg = self._act(zg)
            go = _sigmoid(zo)
            c_prev = c
            c = gf * c_prev + gi * gg
            a = self._act(c)
            h_prev = h
            h = go * a
            hs[:, step] = h
            if train:
                cache.append((h_prev, c_prev, gi, gf, gg, go, zg, c, a))
        if train:
            self._cache = cache
            self._x = x
        return hs if self.return_sequences else h

    def backward(self, dy):
        x = self._x
        b, t, _ = x.shape
        u = self.units
        w, r = self.params["W"], self.params["R"]
        dW, dR, db = self.grads["W"], self.grads["R"], self.grads["b"]
        dx = np.empty_like(x)
        dh_acc = np.zeros((b, u))
        dc_acc = np.zeros((b, u))
        for step in range(t - 1, -1, -1):
            h_prev, c_prev, gi, gf, gg, go, zg, c, a = self._cache[step]
            if self.return_sequences:
                dh = dh_acc + dy[:, step]
            else:
                dh = dh_acc + dy if step == t - 1 else dh_acc
            do = dh * a
            dc = dc_acc + dh * go * self._act_grad(c, a)
            di = dc * gg
            dg = dc * gi
            df = dc * c_prev
            dz = np.concatenate([
                di * gi * (1.0 - gi),
                df * gf * (1.0 - gf),
                dg * self._act_grad(zg, gg),
                do * go * (1.0 - go),
            ], axis=1)
            dW += x[:, step].T @ dz
            dR += h_prev.T @ dz
            db += dz.sum(axis=0)
            dx[:, step] = dz @ w.T
            dh_acc = dz @ r.T
            dc_acc = dc * gf
        return dx


def dense(n_in, units, rng):
    return Dense(n_in, units, rng)


def conv1d(n_in, filters, kernel, rng):
    return Conv1D(n_in, filters, kernel, rng)


def global_avg_pool():
    return GlobalAvgPool()


def batch_norm(channels):
    return BatchNorm(channels)


def dropout(rate=DROPOUT_RATE):
    return Dropout(rate)


def relu():
    return ReLU()


def sigmoid():
    return Sigmoid()


def lstm(n_in, units, rng, return_sequences=False, activation="relu"):
    return Lstm(n_in, units, rng, return_sequences, activation)
