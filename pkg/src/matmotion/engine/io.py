"""Trained-network serialization.

File layout: one UTF-8 JSON header line describing the architecture,
config and array shapes, a newline, then every state array (trainable
parameters and running statistics, in declared layer order) as raw
little-endian float64.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .layers import LayerSpec
from .network import build_network
from .training import TrainConfig, TrainedNet

_FORMAT = "matmotion-net"
_VERSION = 1


def _spec_to_dict(spec: LayerSpec) -> dict:
    return {
        "kind": spec.kind, "units": spec.units, "filters": spec.filters,
        "kernel": spec.kernel, "rate": spec.rate,
        "return_sequences": spec.return_sequences,
    }


def _spec_from_dict(d: dict) -> LayerSpec:
    return LayerSpec(**d)


def save_net(trained: TrainedNet, path) -> None:
    net = trained.network
    items = net.state_items()
    header = {
        "format": _FORMAT,
        "version": _VERSION,
        "arch": trained.arch_name,
        "seed": trained.seed,
        "config": trained.config.__dict__,
        "epochs_run": trained.epochs_run,
        "best_epoch": trained.best_epoch,
        "validation_loss": trained.validation_loss,
        "input_shape": list(net.input_shape),
        "layers": [_spec_to_dict(s) for s in net.specs],
        "arrays": [
            {"layer": i, "name": name, "shape": list(arr.shape)}
            for i, name, arr in items
        ],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for _, _, arr in items:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_net(path) -> TrainedNet:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl].decode("utf-8"))
    if header.get("format") != _FORMAT or header.get("version") != _VERSION:
        raise ValueError(f"{path}: not a recognized network file")
    config = TrainConfig(**header["config"])
    specs = [_spec_from_dict(d) for d in header["layers"]]
    # architecture rebuilt with a throwaway rng; parameters are overwritten
    net = build_network(specs, tuple(header["input_shape"]),
                        np.random.default_rng(0), name=header["arch"],
                        lstm_activation=config.lstm_activation)
    offset = nl + 1
    state = []
    for meta in header["arrays"]:
        shape = tuple(meta["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
        offset += count * 8
        state.append(arr.reshape(shape).astype(float))
    if offset != len(raw):
        raise ValueError(f"{path}: payload size mismatch")
    net.set_state(state)
    return TrainedNet(
        network=net, arch_name=header["arch"], config=config,
        seed=header["seed"], epochs_run=header["epochs_run"],
        best_epoch=header["best_epoch"], validation_loss=header["validation_loss"],
    )
