"""Embedded verification battery behind the `selftest` CLI command.

Four groups: the encoding pipeline against a per-frame reference
implementation, analytic gradients against central finite differences,
confusion-metric identities, and SMO feasibility on toy problems. Each
group reports pass/fail; `inject_fault` deliberately corrupts one check
so the failure path itself stays testable.
"""

from __future__ import annotations

import numpy as np

from . import encoding
from .engine import LayerSpec, bce_grad, bce_loss, build_network
from .engine import layers as L
from .metrics import confusion
from .svm import KernelSVC, kkt_summary
from .synth import generate_synthetic, two_blob_spec

GROUPS = ("encoding", "gradients", "metrics", "svm")


def _reference_encode(frames: np.ndarray) -> np.ndarray:
    """Per-frame re-derivation of the pipeline, kept deliberately naive."""
    n = frames.shape[0]
    raw = np.zeros((n, 6))
    for f in range(n):
        frame = frames[f].astype(float)
        cropped = frame[0:29, 3:29]
        for offset, region in ((0, cropped[0:12, :]), (3, cropped[12:29, :])):
            m, rows_n = region.shape
            total = region.sum()
            if total == 0.0:
                raw[f, offset + 0] = (m + 1) / 2.0
                raw[f, offset + 1] = (rows_n + 1) / 2.0
                raw[f, offset + 2] = 0.0
                continue
            x = 0.0
            y = 0.0
            for i in range(m):
                for j in range(rows_n):
                    x += (i + 1) * region[i, j]
                    y += (j + 1) * region[i, j]
            raw[f, offset + 0] = x / total
            raw[f, offset + 1] = y / total
            raw[f, offset + 2] = total / (m * rows_n)
    smooth = np.zeros_like(raw)
    for c in range(6):
        for t in range(n):
            lo = max(0, t - 2)
            hi = min(n, t + 3)
            smooth[t, c] = raw[lo:hi, c].mean()
    out = np.zeros_like(smooth)
    pos_ranges = [smooth[:, c].max() - smooth[:, c].min() for c in (0, 1, 3, 4)]
    prs_ranges = [smooth[:, c].max() - smooth[:, c].min() for c in (2, 5)]
    d = max(pos_ranges)
    e = max(prs_ranges)
    for c in (0, 1, 3, 4):
        out[:, c] = 0.0 if d == 0.0 else (smooth[:, c] - smooth[:, c].min()) / d
    for c in (2, 5):
        out[:, c] = 0.0 if e == 0.0 else (smooth[:, c] - smooth[:, c].min()) / e
    return out


def check_encoding(n_snippets: int = 5) -> tuple[bool, str]:
    worst = 0.0
    for s in range(n_snippets):
        spec = two_blob_spec(seed=100 + s, amplitude=1.5 + 0.3 * s,
                             freq_hz=1.0 + s, noise_amplitude=2.0)
        snip = generate_synthetic(spec)
        got = encoding.encode(snip)
        want = _reference_encode(snip.frames)
        worst = max(worst, float(np.max(np.abs(got - want))))
    ok = worst < 1e-12
    return ok, f"max |pipeline - reference| = {worst:.3e} over {n_snippets} snippets"


def _grad_check_net(specs, input_shape, seed=0, inject_fault=False) -> float:
    rng = np.random.default_rng(seed)
    net = build_network(specs, input_shape, rng)
    x = np.random.default_rng(seed + 1).normal(size=(3, *input_shape))
    y = np.random.default_rng(seed + 2).integers(0, 2, size=3).astype(float)

    # freeze dropout masks so finite differences see a deterministic loss
    mask_rng = np.random.default_rng(seed + 3)
    shapes = _dropout_shapes(net, x)
    for layer, shape in shapes:
        layer.fixed_mask = (mask_rng.random(shape) >= layer.rate) / (1 - layer.rate)

    def loss_value():
        return bce_loss(net.forward(x, train=True, rng=None), y)

    net.zero_grads()
    probs = net.forward(x, train=True, rng=None)
    net.backward(bce_grad(probs, y).reshape(probs.shape))
    analytic = [g.copy() for g in net.gradients()]
    if inject_fault:
        analytic[0] = analytic[0] + 1.0

    h = 1e-4
    worst = 0.0
    params = [arr for _, _, arr in net.trainable()]
    for arr, grad in zip(params, analytic):
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            up = loss_value()
            flat[idx] = orig - h
            down = loss_value()
            flat[idx] = orig
            numeric = (up - down) / (2 * h)
            denom = max(abs(numeric), abs(gflat[idx]), 1e-4)
            worst = max(worst, abs(numeric - gflat[idx]) / denom)
    return worst


def _dropout_shapes(net, x):
    """Run one forward pass to learn each dropout layer's input shape."""
    shapes = []
    out = x
    for layer in net.layers:
        if layer.kind == L.DROPOUT:
            shapes.append((layer, out.shape))
            continue  # identity in inference mode anyway
        out = layer.forward(out, train=False, rng=None)
    return shapes


def check_gradients(inject_fault: bool = False) -> tuple[bool, str]:
    nets = [
        # dense path with batch norm and dropout
        ([LayerSpec(L.DENSE, units=5), LayerSpec(L.RELU), LayerSpec(L.BATCH_NORM),
          LayerSpec(L.DROPOUT), LayerSpec(L.DENSE, units=1), LayerSpec(L.SIGMOID)],
         (4,)),
        # convolutional path with pooling
        ([LayerSpec(L.CONV1D, filters=3, kernel=7), LayerSpec(L.RELU),
          LayerSpec(L.BATCH_NORM), LayerSpec(L.DROPOUT),
          LayerSpec(L.GLOBAL_AVG_POOL), LayerSpec(L.DENSE, units=1),
          LayerSpec(L.SIGMOID)], (12, 2)),
        # recurrent path
        ([LayerSpec(L.LSTM, units=4), LayerSpec(L.RELU), LayerSpec(L.BATCH_NORM),
          LayerSpec(L.DROPOUT), LayerSpec(L.DENSE, units=1), LayerSpec(L.SIGMOID)],
         (6, 3)),
    ]
    worst = 0.0
    for i, (specs, shape) in enumerate(nets):
        err = _grad_check_net(specs, shape, seed=10 + i,
                              inject_fault=inject_fault and i == 0)
        worst = max(worst, err)
    ok = worst < 1e-4
    return ok, f"max relative gradient error = {worst:.3e}"


def check_metrics(n_cases: int = 200) -> tuple[bool, str]:
    rng = np.random.default_rng(7)
    for _ in range(n_cases):
        n = int(rng.integers(2, 50))
        y = rng.integers(0, 2, size=n)
        pred = rng.integers(0, 2, size=n)
        m = confusion(pred, y)
        if m.total != n:
            return False, "count conservation violated"
        if m.defined:
            ba = (m.tpr + m.tnr) / 2.0
            if abs(ba - m.balanced_accuracy) > 1e-15:
                return False, "balanced accuracy identity violated"
    return True, f"{n_cases} random confusion tables consistent"


def check_svm(n_problems: int = 5) -> tuple[bool, str]:
    rng = np.random.default_rng(11)
    worst_box = 0.0
    worst_balance = 0.0
    for p in range(n_problems):
        n = 14
        x = rng.normal(size=(n, 2))
        y = (x[:, 0] + 0.5 * x[:, 1] > 0).astype(int)
        if len(np.unique(y)) < 2:
            continue
        model = KernelSVC(C=10.0, kernel="rbf", gamma=0.5, random_state=p)
        model.fit(x, y)
        summary = kkt_summary(model)
        worst_box = max(worst_box, summary["box_violation"])
        worst_balance = max(worst_balance, summary["balance"])
    ok = worst_box <= 1e-12 and worst_balance < 1e-3
    return ok, (f"box violation {worst_box:.3e}, "
                f"|sum(alpha*y)| {worst_balance:.3e}")


def run_selftest(inject_fault: str | None = None) -> tuple[bool, list[str]]:
    """Run all groups; returns overall success and one line per group."""
    lines = []
    all_ok = True
    for name, fn in (
        ("encoding", check_encoding),
        ("gradients", lambda: check_gradients(inject_fault == "gradients")),
        ("metrics", check_metrics),
        ("svm", check_svm),
    ):
        ok, detail = fn()
        all_ok &= ok
        lines.append(f"{name}: {'PASS' if ok else 'FAIL'} ({detail})")
    return all_ok, lines
