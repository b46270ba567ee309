import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matmotion.dataset import FRAME_COUNT
from matmotion.encoding import (
    MotionEncoder,
    center_of_pressure,
    cop_overlay,
    crop_and_split,
    encode,
    moving_average,
    normalize,
    raw_signals,
)
from matmotion.synth import generate_synthetic, two_blob_spec


def brute_force_encode(frames):
    """Independent per-frame reference: explicit loops, no shared code path."""
    frames = np.asarray(frames, dtype=float)
    n = frames.shape[0]
    raw = np.zeros((n, 6))
    for f in range(n):
        cropped = frames[f][0:29, 3:29]
        regions = ((0, cropped[0:12]), (3, cropped[12:29]))
        for offset, region in regions:
            m, cols = region.shape
            total = 0.0
            wx = 0.0
            wy = 0.0
            for i in range(m):
                for j in range(cols):
                    v = region[i, j]
                    total += v
                    wx += (i + 1) * v
                    wy += (j + 1) * v
            if total == 0.0:
                raw[f, offset] = (m + 1) / 2
                raw[f, offset + 1] = (cols + 1) / 2
                raw[f, offset + 2] = 0.0
            else:
                raw[f, offset] = wx / total
                raw[f, offset + 1] = wy / total
                raw[f, offset + 2] = total / (m * cols)
    smoothed = np.zeros_like(raw)
    for c in range(6):
        for t in range(n):
            window = raw[max(0, t - 2):min(n, t + 3), c]
            smoothed[t, c] = window.sum() / len(window)
    out = np.zeros_like(smoothed)
    pos = (0, 1, 3, 4)
    d = max(smoothed[:, c].max() - smoothed[:, c].min() for c in pos)
    for c in pos:
        out[:, c] = 0.0 if d == 0 else (smoothed[:, c] - smoothed[:, c].min()) / d
    e = max(smoothed[:, c].max() - smoothed[:, c].min() for c in (2, 5))
    for c in (2, 5):
        out[:, c] = 0.0 if e == 0 else (smoothed[:, c] - smoothed[:, c].min()) / e
    return out


class TestCropAndSplit:
    def test_corner_maps_to_top_origin(self):
        frame = np.zeros((32, 32))
        frame[0, 3] = 9  # original (row 1, col 4), 1-based
        top, bottom = crop_and_split(frame)
        assert top.shape == (12, 26) and bottom.shape == (17, 26)
        assert top[0, 0] == 9
        assert top.sum() == 9 and bottom.sum() == 0

    def test_outside_crop_is_dropped(self):
        frame = np.zeros((32, 32))
        frame[29, 9] = 5  # original row 30 lies outside the crop
        top, bottom = crop_and_split(frame)
        assert top.sum() == 0 and bottom.sum() == 0

    def test_row13_col4_is_bottom_origin(self):
        frame = np.zeros((32, 32))
        frame[12, 3] = 7  # original (13, 4): crop row 13 = bottom row 1
        top, bottom = crop_and_split(frame)
        assert bottom[0, 0] == 7
        assert top.sum() == 0


class TestCenterOfPressure:
    def test_uniform_region_gives_geometric_center(self):
        region = np.full((12, 26), 3.0)
        x, y, p = center_of_pressure(region)
        assert x == pytest.approx(6.5) and y == pytest.approx(13.5)
        assert p == pytest.approx(3.0)

    def test_point_mass(self):
        region = np.zeros((12, 26))
        region[2, 19] = 42  # 1-based (3, 20)
        x, y, p = center_of_pressure(region)
        assert (x, y) == (3.0, 20.0)
        assert p == pytest.approx(42 / 312)

    def test_two_cell_hand_example(self):
        region = np.zeros((12, 26))
        region[0, 0] = 1
        region[4, 0] = 3
        x, y, p = center_of_pressure(region)
        assert x == pytest.approx(4.0)  # (1*1 + 5*3) / 4
        assert y == pytest.approx(1.0)
        assert p == pytest.approx(4 / 312)

    def test_silent_region_falls_back_to_center(self):
        x, y, p = center_of_pressure(np.zeros((17, 26)))
        assert (x, y, p) == (9.0, 13.5, 0.0)


class TestMovingAverage:
    def test_constant_preserved_exactly(self):
        out = moving_average(np.full(500, 3.7))
        np.testing.assert_array_equal(out, np.full(500, 3.7))

    def test_linear_ramp_interior_unchanged(self):
        ramp = np.arange(500, dtype=float)
        out = moving_average(ramp)
        np.testing.assert_allclose(out[2:-2], ramp[2:-2], rtol=1e-14)

    def test_impulse_response(self):
        s = np.zeros(500)
        s[250] = 1.0
        out = moving_average(s)
        np.testing.assert_allclose(out[248:253], 0.2)
        assert out[247] == 0.0 and out[253] == 0.0

    def test_boundary_truncation(self):
        s = np.zeros(500)
        s[0] = 1.0
        out = moving_average(s)
        # windows of lengths 3, 4, 5 at positions 0, 1, 2
        np.testing.assert_allclose(out[:4], [1 / 3, 1 / 4, 1 / 5, 0.0])

    def test_even_window_rejected(self):
        with pytest.raises(ValueError):
            moving_average(np.zeros(10), window=4)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.floats(-3, 3), st.floats(-3, 3))
    def test_linearity(self, seed, a, b):
        rng = np.random.default_rng(seed)
        s1, s2 = rng.normal(size=(2, 100))
        combined = moving_average(a * s1 + b * s2)
        separate = a * moving_average(s1) + b * moving_average(s2)
        np.testing.assert_allclose(combined, separate, atol=1e-12)


class TestNormalize:
    def test_constant_channels_become_zero(self):
        raw = np.tile([3.0, 5.0, 7.0, 1.0, 2.0, 9.0], (500, 1))
        assert np.array_equal(normalize(raw), np.zeros((500, 6)))

    def test_max_range_channel_spans_unit_interval(self):
        raw = np.zeros((500, 6))
        raw[:, 0] = np.linspace(0.0, 2.0, 500)   # x_t, range 2
        raw[:, 1] = np.linspace(5.0, 6.0, 500)   # y_t, range 1
        out = normalize(raw)
        assert out[:, 0].min() == 0.0 and out[:, 0].max() == 1.0
        assert out[:, 1].max() == pytest.approx(0.5)

    def test_shared_position_denominator(self):
        raw = np.zeros((500, 6))
        raw[:, 0] = np.linspace(0.0, 1.0, 500)   # x_t, range 1
        raw[:, 4] = np.linspace(0.0, 4.0, 500)   # y_b, range 4
        out = normalize(raw)
        assert out[:, 0].max() == pytest.approx(0.25)
        assert out[:, 4].max() == 1.0

    def test_pressure_group_is_separate(self):
        raw = np.zeros((500, 6))
        raw[:, 2] = np.linspace(0.0, 0.5, 500)   # p_t
        raw[:, 5] = np.linspace(0.0, 0.1, 500)   # p_b
        out = normalize(raw)
        assert out[:, 2].max() == 1.0
        assert out[:, 5].max() == pytest.approx(0.2)


class TestEncode:
    def test_all_zero_snippet(self, zero_snippet):
        assert np.array_equal(encode(zero_snippet), np.zeros((500, 6)))

    def test_static_snippet_encodes_to_zero(self):
        spec = two_blob_spec(seed=0, amplitude=0.0, noise_amplitude=0.0)
        # static blobs: constant raw signals normalize to zero everywhere
        spec = type(spec)(blobs=tuple(
            type(b)(center=b.center, radius=b.radius, osc_amplitude=0.0,
                    osc_freq_hz=b.osc_freq_hz) for b in spec.blobs),
            pressure_scale=spec.pressure_scale, noise_amplitude=0.0, seed=0)
        snip = generate_synthetic(spec)
        assert np.array_equal(encode(snip), np.zeros((500, 6)))

    def test_matches_brute_force_oracle(self):
        for seed in range(3):
            spec = two_blob_spec(seed=seed, amplitude=1.0 + seed,
                                 freq_hz=1.0 + 2 * seed, noise_amplitude=2.0)
            snip = generate_synthetic(spec)
            got = encode(snip)
            want = brute_force_encode(snip.frames)
            np.testing.assert_allclose(got, want, atol=1e-12, rtol=0)

    def test_values_in_unit_interval(self, random_snippet):
        for seed in range(5):
            out = encode(random_snippet(seed=seed))
            assert out.min() >= 0.0 and out.max() <= 1.0

    def test_scale_invariance(self):
        # scaling applied to the already quantized float frames
        snip = generate_synthetic(two_blob_spec(seed=4, amplitude=2.0,
                                                noise_amplitude=1.0))
        base = encode(snip.frames.astype(float))
        for k in (0.5, 2.0, 7.0):
            scaled = encode(snip.frames.astype(float) * k)
            np.testing.assert_allclose(scaled, base, atol=1e-12, rtol=0)

    def test_renormalization_is_identity(self):
        snip = generate_synthetic(two_blob_spec(seed=5, amplitude=2.0,
                                                noise_amplitude=1.0))
        signals = encode(snip)
        assert np.array_equal(normalize(signals), signals)


def plateau_point_mass_frames(row_a, row_b, col_a, col_b, bottom_row, bottom_col):
    """Point masses alternating between two positions 5 grid units apart.

    The first and last four frames hold still, so truncated boundary
    windows average constants; interior 5-frame windows see values
    congruent mod 5 and average to integers. All smoothed positions are
    then exactly representable and shift exactly under integer
    translation, keeping the normalized output bitwise identical.
    """
    frames = np.zeros((FRAME_COUNT, 32, 32), dtype=np.uint8)
    for t in range(FRAME_COUNT):
        moving = 4 <= t < FRAME_COUNT - 4 and t % 2 == 1
        r = row_b if moving else row_a
        c = col_b if moving else col_a
        frames[t, r - 1, c - 1] = 40           # top region point mass
        frames[t, bottom_row - 1, bottom_col - 1] = 60  # static bottom mass
    return frames


class TestTranslationInvariance:
    def test_exact_translation_invariance(self):
        base = plateau_point_mass_frames(3, 8, 6, 11, 20, 15)
        # shift the whole active pattern by (+2, +3); rows 5/10 stay in the
        # top region, the bottom mass stays in the bottom region
        shifted = plateau_point_mass_frames(5, 10, 9, 14, 22, 18)
        np.testing.assert_array_equal(encode(base), encode(shifted))

    def test_translation_preserves_raw_offsets(self):
        base = plateau_point_mass_frames(3, 8, 6, 11, 20, 15)
        shifted = plateau_point_mass_frames(5, 10, 9, 14, 22, 18)
        raw_a = raw_signals(base)
        raw_b = raw_signals(shifted)
        np.testing.assert_array_equal(raw_b[:, 0], raw_a[:, 0] + 2)
        np.testing.assert_array_equal(raw_b[:, 1], raw_a[:, 1] + 3)


def test_cop_overlay_original_grid_coordinates():
    frames = np.zeros((FRAME_COUNT, 32, 32), dtype=np.uint8)
    frames[:, 4, 9] = 10    # original (5, 10): top region
    frames[:, 20, 12] = 10  # original (21, 13): bottom region
    coords = cop_overlay(frames)
    np.testing.assert_allclose(coords[:, 0], 5.0)
    np.testing.assert_allclose(coords[:, 1], 10.0)
    np.testing.assert_allclose(coords[:, 2], 21.0)
    np.testing.assert_allclose(coords[:, 3], 13.0)


class TestMotionEncoderEstimator:
    def test_transform_stack(self, random_snippet):
        enc = MotionEncoder()
        snips = [random_snippet(seed=s) for s in range(3)]
        out = enc.fit_transform(snips)
        assert out.shape == (3, 500, 6)
        np.testing.assert_array_equal(out[1], encode(snips[1]))

    def test_get_params_roundtrip(self):
        enc = MotionEncoder()
        assert enc.get_params() == {}
