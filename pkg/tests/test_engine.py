import numpy as np
import pytest

from matmotion.engine import (
    AdamState,
    LayerSpec,
    TrainConfig,
    adam_step,
    bce_grad,
    bce_loss,
    build_network,
    load_net,
    save_net,
    train,
)
from matmotion.engine import layers as L


def rng(seed=0):
    return np.random.default_rng(seed)


class TestForwardExamples:
    def test_zero_final_dense_gives_half(self):
        net = build_network([LayerSpec(L.DENSE, units=1), LayerSpec(L.SIGMOID)],
                            (5,), rng())
        net.layers[0].params["W"][...] = 0.0
        net.layers[0].params["b"][...] = 0.0
        x = rng(1).normal(size=(7, 5))
        np.testing.assert_array_equal(net.forward(x), np.full((7, 1), 0.5))

    def test_identity_convolution(self):
        net = build_network([LayerSpec(L.CONV1D, filters=1, kernel=7)], (20, 1),
                            rng())
        w = net.layers[0].params["W"]
        w[...] = 0.0
        w[3, 0, 0] = 1.0  # center tap only
        net.layers[0].params["b"][...] = 0.0
        x = rng(2).normal(size=(2, 20, 1))
        np.testing.assert_allclose(net.forward(x), x, atol=1e-15)

    def test_global_avg_pool_on_constant_channels(self):
        net = build_network([LayerSpec(L.GLOBAL_AVG_POOL)], (500, 4), rng())
        x = np.broadcast_to(np.array([1.0, 2.0, 3.0, 4.0]), (1, 500, 4)).copy()
        np.testing.assert_array_equal(net.forward(x), [[1.0, 2.0, 3.0, 4.0]])

    def test_train_mode_dropout_needs_rng(self):
        net = build_network([LayerSpec(L.DROPOUT)], (4,), rng())
        with pytest.raises(ValueError, match="RNG"):
            net.forward(np.ones((2, 4)), train=True, rng=None)

    def test_infer_batch_independence(self):
        specs = [LayerSpec(L.DENSE, units=8), LayerSpec(L.RELU),
                 LayerSpec(L.BATCH_NORM), LayerSpec(L.DROPOUT),
                 LayerSpec(L.DENSE, units=1), LayerSpec(L.SIGMOID)]
        net = build_network(specs, (6,), rng(3))
        x = rng(4).normal(size=(9, 6))
        batched = net.predict_proba(x)
        singles = np.concatenate([net.predict_proba(x[i:i + 1]) for i in range(9)])
        np.testing.assert_allclose(batched, singles, atol=1e-15, rtol=0)

    def test_shape_mismatch_rejected(self):
        net = build_network([LayerSpec(L.DENSE, units=1)], (4,), rng())
        with pytest.raises(ValueError, match="input shape"):
            net.forward(np.zeros((2, 5)))

    def test_hand_built_logistic_probability(self):
        # weights picked so input (1, 0, 0) gives sigmoid(2) ~ 0.8808: FM+
        net = build_network([LayerSpec(L.DENSE, units=1), LayerSpec(L.SIGMOID)],
                            (3,), rng())
        net.layers[0].params["W"][...] = np.array([[2.0], [0.0], [0.0]])
        net.layers[0].params["b"][...] = 0.0
        p = net.predict_proba(np.array([[1.0, 0.0, 0.0]]))
        assert p[0] == pytest.approx(0.880797, abs=1e-6)
        assert (p >= 0.5).astype(int)[0] == 1


class TestBce:
    def test_half_probability(self):
        assert bce_loss(np.array([0.5]), np.array([1.0])) == pytest.approx(
            np.log(2.0), rel=1e-12)

    def test_perfect_predictions_clamp(self):
        p = np.array([1.0, 0.0, 1.0])
        y = np.array([1.0, 0.0, 1.0])
        assert bce_loss(p, y) < 1e-6

    def test_hand_example(self):
        p = np.array([0.9, 0.2])
        y = np.array([1.0, 0.0])
        expected = (-np.log(0.9) - np.log(0.8)) / 2.0
        assert bce_loss(p, y) == pytest.approx(expected, rel=1e-12)
        assert bce_loss(p, y) == pytest.approx(0.164252, abs=1e-6)

    def test_grad_matches_finite_difference(self):
        p = np.array([0.3, 0.8, 0.51])
        y = np.array([1.0, 0.0, 1.0])
        g = bce_grad(p, y)
        h = 1e-7
        for i in range(3):
            up = p.copy(); up[i] += h
            dn = p.copy(); dn[i] -= h
            num = (bce_loss(up, y) - bce_loss(dn, y)) / (2 * h)
            assert g[i] == pytest.approx(num, rel=1e-5)


class TestAdam:
    def test_first_step_magnitude_is_learning_rate(self):
        config = TrainConfig()
        params = [np.array([1.0, -2.0])]
        grads = [np.array([0.3, -4.0])]
        state = AdamState.for_params(params)
        adam_step(params, grads, state, config)
        # bias correction makes the first step ~lr * sign(g)
        np.testing.assert_allclose(params[0], [1.0 - 0.001, -2.0 + 0.001],
                                   atol=1e-9)

    def test_zero_gradient_leaves_params(self):
        config = TrainConfig()
        params = [np.array([0.7])]
        state = AdamState.for_params(params)
        for _ in range(5):
            adam_step(params, [np.zeros(1)], state, config)
        assert params[0][0] == 0.7

    def test_two_steps_constant_gradient(self):
        config = TrainConfig()
        params = [np.array([0.0])]
        state = AdamState.for_params(params)
        for _ in range(2):
            adam_step(params, [np.ones(1)], state, config)
        assert params[0][0] == pytest.approx(-0.002, abs=1e-6)
        assert state.t == 2


def frozen_dropout_masks(net, x, seed=99):
    """Fix every dropout mask so the loss is a deterministic function."""
    mask_rng = np.random.default_rng(seed)
    out = x
    for layer in net.layers:
        if layer.kind == L.DROPOUT:
            layer.fixed_mask = (
                (mask_rng.random(out.shape) >= layer.rate) / (1 - layer.rate)
            )
            continue
        out = layer.forward(out, train=False, rng=None)


def gradient_check(specs, input_shape, seed=0, batch=3):
    """Central finite differences against the analytic gradients."""
    net = build_network(specs, input_shape, rng(seed))
    x = rng(seed + 1).normal(size=(batch, *input_shape))
    y = rng(seed + 2).integers(0, 2, size=batch).astype(float)
    frozen_dropout_masks(net, x)

    def loss():
        return bce_loss(net.forward(x, train=True, rng=None), y)

    net.zero_grads()
    probs = net.forward(x, train=True, rng=None)
    net.backward(bce_grad(probs, y).reshape(probs.shape))
    analytic = [g.copy() for g in net.gradients()]

    h = 1e-4
    worst = 0.0
    for arr, grad in zip([a for _, _, a in net.trainable()], analytic):
        flat, gflat = arr.reshape(-1), grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss()
            flat[i] = orig - h
            down = loss()
            flat[i] = orig
            numeric = (up - down) / (2 * h)
            denom = max(abs(numeric), abs(gflat[i]), 1e-4)
            worst = max(worst, abs(numeric - gflat[i]) / denom)
    return worst


BLOCK = lambda *specs: [s for spec in specs for s in spec]  # noqa: E731


def dense_block(units):
    return [LayerSpec(L.DENSE, units=units), LayerSpec(L.RELU),
            LayerSpec(L.BATCH_NORM), LayerSpec(L.DROPOUT)]


def conv_block(filters, kernel):
    return [LayerSpec(L.CONV1D, filters=filters, kernel=kernel),
            LayerSpec(L.RELU), LayerSpec(L.BATCH_NORM), LayerSpec(L.DROPOUT)]


def lstm_block(units, return_sequences=False):
    return [LayerSpec(L.LSTM, units=units, return_sequences=return_sequences),
            LayerSpec(L.RELU), LayerSpec(L.BATCH_NORM), LayerSpec(L.DROPOUT)]


OUT = [LayerSpec(L.DENSE, units=1), LayerSpec(L.SIGMOID)]


class TestGradients:
    """Finite-difference validation for every layer kind per family."""

    def test_dense_family(self):
        specs = dense_block(6) + dense_block(4) + OUT
        assert gradient_check(specs, (5,), seed=10) < 1e-4

    @pytest.mark.parametrize("kernel", [7, 13, 21])
    def test_conv_family(self, kernel):
        specs = (conv_block(3, kernel) + [LayerSpec(L.GLOBAL_AVG_POOL)]
                 + dense_block(4) + OUT)
        assert gradient_check(specs, (max(10, kernel + 3), 2), seed=20) < 1e-4

    def test_conv_stack(self):
        specs = (conv_block(2, 7) + conv_block(3, 13)
                 + [LayerSpec(L.GLOBAL_AVG_POOL)] + OUT)
        assert gradient_check(specs, (16, 2), seed=21) < 1e-4

    def test_lstm_family(self):
        specs = lstm_block(4) + dense_block(3) + OUT
        assert gradient_check(specs, (6, 3), seed=30) < 1e-4

    def test_stacked_lstm_with_sequence_batchnorm(self):
        specs = lstm_block(4, return_sequences=True) + lstm_block(3) + OUT
        assert gradient_check(specs, (5, 2), seed=31) < 1e-4

    def test_lstm_tanh_variant(self):
        specs = [LayerSpec(L.LSTM, units=4)] + OUT
        net_specs = specs
        net = build_network(net_specs, (6, 3), rng(32), lstm_activation="tanh")
        x = rng(33).normal(size=(2, 6, 3))
        y = np.array([1.0, 0.0])
        net.zero_grads()
        probs = net.forward(x, train=True, rng=None)
        net.backward(bce_grad(probs, y).reshape(probs.shape))
        analytic = [g.copy() for g in net.gradients()]
        h = 1e-4
        for arr, grad in zip([a for _, _, a in net.trainable()], analytic):
            flat, gflat = arr.reshape(-1), grad.reshape(-1)
            for i in range(0, flat.size, max(1, flat.size // 17)):
                orig = flat[i]
                flat[i] = orig + h
                up = bce_loss(net.forward(x, train=True, rng=None), y)
                flat[i] = orig - h
                down = bce_loss(net.forward(x, train=True, rng=None), y)
                flat[i] = orig
                numeric = (up - down) / (2 * h)
                denom = max(abs(numeric), abs(gflat[i]), 1e-4)
                assert abs(numeric - gflat[i]) / denom < 1e-4

    def test_logistic_regression_closed_form(self):
        # single dense into sigmoid, one sample: dW = (p - y) x
        net = build_network(OUT, (4,), rng(40))
        x = rng(41).normal(size=(1, 4))
        y = np.array([1.0])
        net.zero_grads()
        p = net.forward(x, train=True, rng=None)
        net.backward(bce_grad(p, y).reshape(p.shape))
        expected = (float(p[0, 0]) - 1.0) * x[0]
        np.testing.assert_allclose(net.layers[0].grads["W"][:, 0], expected,
                                   rtol=1e-12)
        assert net.layers[0].grads["b"][0] == pytest.approx(float(p[0, 0]) - 1.0)

    def test_balanced_zero_input_has_zero_bias_gradient(self):
        net = build_network(OUT, (3,), rng(42))
        x = np.zeros((4, 3))
        y = np.array([0.0, 1.0, 0.0, 1.0])
        net.zero_grads()
        net.layers[0].params["W"][...] = 0.0
        net.layers[0].params["b"][...] = 0.0
        p = net.forward(x, train=True, rng=None)
        net.backward(bce_grad(p, y).reshape(p.shape))
        assert net.layers[0].grads["b"][0] == 0.0


def separable_toy(n=24, seed=0):
    r = rng(seed)
    x = r.normal(size=(n, 2))
    y = (x[:, 0] - 0.5 * x[:, 1] > 0).astype(int)
    x[y == 1] += 1.5
    x[y == 0] -= 1.5
    return x, y


class TestTraining:
    def test_constant_validation_loss_stops_after_patience(self):
        # zero inputs + balanced full-batch labels: no gradient, no change
        x = np.zeros((8, 3))
        y = np.array([0, 1] * 4)
        config = TrainConfig(batch_size=8, patience=10, max_epochs=200, seed=5)
        net = train(OUT, x, y, x.copy(), y.copy(), config)
        assert net.epochs_run == 11  # 1 best epoch + 10 stale
        assert net.best_epoch == 1
        assert len(net.epoch_losses) == 11
        assert all(l == net.epoch_losses[0] for l in net.epoch_losses)

    def test_improving_loss_runs_to_max_epochs(self):
        x, y = separable_toy(seed=1)
        config = TrainConfig(batch_size=24, patience=10, max_epochs=12,
                             learning_rate=0.01, seed=2)
        net = train(dense_block(8) + OUT, x, y, x, y, config)
        assert net.epochs_run == 12
        # strict improvement every epoch: the last epoch is the best one
        diffs = np.diff(net.epoch_losses)
        assert np.all(diffs < 0)
        assert net.best_epoch == 12
        assert net.validation_loss == net.epoch_losses[-1]

    def test_best_epoch_weights_restored(self):
        x, y = separable_toy(seed=3)
        config = TrainConfig(batch_size=4, patience=5, max_epochs=60, seed=4)
        net = train(dense_block(8) + OUT, x[:16], y[:16], x[16:], y[16:], config)
        assert net.validation_loss == min(net.epoch_losses)
        # restored parameters reproduce the recorded best validation loss
        re_eval = bce_loss(net.predict_proba(x[16:]), y[16:])
        assert re_eval == pytest.approx(net.validation_loss, rel=1e-12)

    def test_separable_toy_reaches_full_train_accuracy(self):
        x, y = separable_toy(n=32, seed=6)
        config = TrainConfig(batch_size=4, patience=10, max_epochs=200, seed=7)
        specs = dense_block(100) + OUT  # same shape as the smallest FFN entry
        net = train(specs, x, y, x, y, config)
        assert np.mean(net.predict(x) == y) == 1.0

    def test_determinism(self):
        x, y = separable_toy(seed=8)
        config = TrainConfig(batch_size=4, max_epochs=10, seed=9)
        a = train(dense_block(6) + OUT, x[:16], y[:16], x[16:], y[16:], config)
        b = train(dense_block(6) + OUT, x[:16], y[:16], x[16:], y[16:], config)
        for arr_a, arr_b in zip(a.network.get_state(), b.network.get_state()):
            np.testing.assert_array_equal(arr_a, arr_b)
        assert a.epoch_losses == b.epoch_losses

    def test_empty_sets_rejected(self):
        x, y = separable_toy()
        with pytest.raises(ValueError):
            train(OUT, x[:0], y[:0], x, y, TrainConfig())
        with pytest.raises(ValueError):
            train(OUT, x, y, x[:0], y[:0], TrainConfig())


class TestSerialization:
    def test_round_trip(self, tmp_path):
        x, y = separable_toy(seed=11)
        config = TrainConfig(batch_size=4, max_epochs=8, seed=12)
        specs = (conv_block(2, 7) + [LayerSpec(L.GLOBAL_AVG_POOL)]
                 + dense_block(3) + OUT)
        xs = rng(13).normal(size=(12, 10, 2))
        ys = rng(14).integers(0, 2, size=12)
        net = train(specs, xs[:8], ys[:8], xs[8:], ys[8:], config)
        path = tmp_path / "model.net"
        save_net(net, path)
        loaded = load_net(path)
        np.testing.assert_array_equal(loaded.predict_proba(xs),
                                      net.predict_proba(xs))
        assert loaded.arch_name == net.arch_name
        assert loaded.validation_loss == net.validation_loss
        assert loaded.config == net.config
        for a, b in zip(net.network.get_state(), loaded.network.get_state()):
            np.testing.assert_array_equal(a, b)

    def test_saved_bytes_deterministic(self, tmp_path):
        x, y = separable_toy(seed=15)
        config = TrainConfig(batch_size=4, max_epochs=5, seed=16)
        paths = []
        for run in range(2):
            net = train(dense_block(4) + OUT, x[:16], y[:16], x[16:], y[16:],
                        config)
            p = tmp_path / f"m{run}.net"
            save_net(net, p)
            paths.append(p)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=-1.0)
        with pytest.raises(ValueError):
            TrainConfig(validation_fraction=1.5)
