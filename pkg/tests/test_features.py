import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matmotion.features import (
    FEATURE_NAMES_12,
    FEATURE_NAMES_24,
    FeatureExtractor,
    extract_features,
    feature_names,
    first_difference,
)


class TestFirstDifference:
    def test_constant_gives_zeros(self):
        out = first_difference(np.full(500, 0.3))
        assert out.shape == (499,)
        assert np.array_equal(out, np.zeros(499))

    def test_ramp_gives_constant_slope(self):
        ramp = np.arange(500) * 0.002
        np.testing.assert_allclose(first_difference(ramp), 0.002, atol=1e-15)

    def test_alternating_signal(self):
        s = np.arange(500) % 2  # 0, 1, 0, 1, ...
        d = first_difference(s)
        assert d.shape == (499,)
        expected = np.where(np.arange(499) % 2 == 0, 1.0, -1.0)
        assert np.array_equal(d, expected)

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            first_difference(np.array([1.0]))


def signals_with_channel(values, channel=0):
    x = np.zeros((500, 6))
    x[:, channel] = values
    return x


class TestExtractFeatures:
    def test_zero_signals_full24(self):
        out = extract_features(np.zeros((500, 6)), "full24")
        assert out.shape == (24,)
        assert np.array_equal(out, np.zeros(24))

    def test_constant_channel_base12(self):
        out = extract_features(signals_with_channel(np.full(500, 0.5)), "base12")
        assert out.shape == (12,)
        assert out[0] == 0.5 and out[1] == 0.0

    def test_alternating_channel_closed_form(self):
        s = (np.arange(500) % 2).astype(float)
        out = extract_features(signals_with_channel(s), "full24")
        assert out[0] == pytest.approx(0.5)     # mean
        assert out[1] == pytest.approx(0.5)     # population std
        # 499 differences: 250 of +1, 249 of -1
        mean_d = 1.0 / 499.0
        std_d = np.sqrt(1.0 - mean_d ** 2)
        assert out[12] == pytest.approx(mean_d)
        assert out[13] == pytest.approx(std_d)

    def test_population_std_convention(self):
        s = np.zeros(500)
        s[0] = 1.0
        out = extract_features(signals_with_channel(s), "base12")
        # divide by N, not N-1
        expected = np.sqrt((1 - 1 / 500) ** 2 / 500 + 499 * (1 / 500) ** 2 / 500)
        assert out[1] == pytest.approx(expected, rel=1e-12)

    def test_full24_prefix_equals_base12(self):
        rng = np.random.default_rng(3)
        x = rng.random((500, 6))
        full = extract_features(x, "full24")
        base = extract_features(x, "base12")
        assert np.array_equal(full[:12], base)

    def test_stack_matches_per_item(self):
        rng = np.random.default_rng(4)
        x = rng.random((3, 500, 6))
        stacked = extract_features(x, "full24")
        assert stacked.shape == (3, 24)
        for i in range(3):
            np.testing.assert_array_equal(stacked[i],
                                          extract_features(x[i], "full24"))

    def test_order_independence(self):
        rng = np.random.default_rng(5)
        x = rng.random((4, 500, 6))
        original = extract_features(x, "full24")
        permuted = extract_features(x[::-1], "full24")
        np.testing.assert_array_equal(original, permuted[::-1])

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            extract_features(np.zeros((500, 6)), "base13")

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_std_nonnegative_and_zero_iff_constant(self, seed):
        rng = np.random.default_rng(seed)
        x = np.zeros((500, 6))
        x[:, 0] = rng.random(500)
        x[:, 1] = 0.25
        out = extract_features(x, "base12")
        assert all(out[1::2] >= 0.0)
        assert out[3] == 0.0  # constant channel
        if np.ptp(x[:, 0]) > 0:
            assert out[1] > 0.0


class TestNames:
    def test_lengths(self):
        assert len(FEATURE_NAMES_12) == 12
        assert len(FEATURE_NAMES_24) == 24

    def test_ordering(self):
        assert FEATURE_NAMES_12[:4] == ("mean_x_t", "std_x_t", "mean_y_t", "std_y_t")
        assert FEATURE_NAMES_24[12:14] == ("mean_dx_t", "std_dx_t")

    def test_variant_dispatch(self):
        assert feature_names("base12") == FEATURE_NAMES_12
        assert feature_names("full24") == FEATURE_NAMES_24


class TestFeatureExtractorEstimator:
    def test_transform_and_names(self):
        fx = FeatureExtractor(variant="base12")
        rng = np.random.default_rng(0)
        out = fx.fit_transform(rng.random((2, 500, 6)))
        assert out.shape == (2, 12)
        assert list(fx.get_feature_names_out()) == list(FEATURE_NAMES_12)

    def test_get_params(self):
        assert FeatureExtractor(variant="full24").get_params() == {
            "variant": "full24"
        }

    def test_invalid_variant_raises_on_fit(self):
        with pytest.raises(ValueError):
            FeatureExtractor(variant="bogus").fit()
