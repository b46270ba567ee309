"""Synthetic snippet generation.

Real recordings show two strongly activated areas on the mat, one under
the shoulders/head and one under the hips. The generator places one
truncated Gaussian pressure blob per area and moves each blob's center on
a small circle (sinusoidal row offset, cosinusoidal column offset), then
quantizes to the sensor's 8-bit range. Frames are a pure function of the
generator parameters, including the noise stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import (
    FRAME_COUNT,
    GRID_COLS,
    GRID_ROWS,
    LABEL_FM_MINUS,
    LABEL_FM_PLUS,
    SAMPLING_HZ,
    Dataset,
    PressureSnippet,
)

# Crop window of the downstream encoder, 1-based inclusive original-grid
# coordinates. Blob centers must start inside it.
CROP_ROWS = (1, 29)
CROP_COLS = (4, 29)

_NYQUIST_HZ = SAMPLING_HZ / 2.0


@dataclass(frozen=True)
class BlobSpec:
    """One oscillating pressure blob.

    center: (row, col), 1-based original-grid units; radius: Gaussian sigma
    in grid units (0 gives a single-cell point mass); osc_amplitude: radius
    of the circular center motion in grid units; osc_freq_hz: revolutions
    per second; phase: radians added to the oscillation argument.
    """

    center: tuple[float, float]
    radius: float
    osc_amplitude: float = 0.0
    osc_freq_hz: float = 1.0
    phase: float = 0.0


@dataclass(frozen=True)
class SynthSpec:
    blobs: tuple[BlobSpec, ...]
    pressure_scale: float = 150.0
    noise_amplitude: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for blob in self.blobs:
            row, col = blob.center
            if not (CROP_ROWS[0] <= row <= CROP_ROWS[1]
                    and CROP_COLS[0] <= col <= CROP_COLS[1]):
                raise ValueError(
                    f"blob center {blob.center} outside crop window "
                    f"rows {CROP_ROWS}, cols {CROP_COLS}"
                )
            if not 0.0 < blob.osc_freq_hz < _NYQUIST_HZ:
                raise ValueError(
                    f"oscillation frequency must be in (0, {_NYQUIST_HZ}) Hz, "
                    f"got {blob.osc_freq_hz}"
                )


def two_blob_spec(seed: int = 0, *, top_center=(7.0, 16.0), bottom_center=(21.0, 16.0),
                  radius: float = 2.0, amplitude: float = 2.0, freq_hz: float = 1.0,
                  pressure_scale: float = 150.0, noise_amplitude: float = 0.0,
                  amplitude_ratio: float = 0.6, phase: float = 0.0) -> SynthSpec:
    """Shoulders/head blob plus hips blob with a shared motion frequency.

    The bottom blob moves with `amplitude * amplitude_ratio` so the two
    position channels keep distinct ranges after joint normalization.
    """
    return SynthSpec(
        blobs=(
            BlobSpec(center=top_center, radius=radius, osc_amplitude=amplitude,
                     osc_freq_hz=freq_hz, phase=phase),
            BlobSpec(center=bottom_center, radius=radius,
                     osc_amplitude=amplitude * amplitude_ratio,
                     osc_freq_hz=freq_hz, phase=phase),
        ),
        pressure_scale=pressure_scale,
        noise_amplitude=noise_amplitude,
        seed=seed,
    )


def generate_synthetic(spec: SynthSpec, *, label: str = LABEL_FM_MINUS,
                       infant_id: str = "synth", session: str = "T1",
                       snippet_id: str | None = None) -> PressureSnippet:
    """Render a 500-frame snippet, deterministic given the seed."""
    rng = np.random.default_rng(spec.seed)
    t = np.arange(FRAME_COUNT) / SAMPLING_HZ
    rows = np.arange(1, GRID_ROWS + 1, dtype=float)
    cols = np.arange(1, GRID_COLS + 1, dtype=float)

    values = np.zeros((FRAME_COUNT, GRID_ROWS, GRID_COLS))
    for blob in spec.blobs:
        arg = 2.0 * np.pi * blob.osc_freq_hz * t + blob.phase
        ci = blob.center[0] + blob.osc_amplitude * np.sin(arg)
        cj = blob.center[1] + blob.osc_amplitude * np.cos(arg)
        di = rows[None, :, None] - ci[:, None, None]
        dj = cols[None, None, :] - cj[:, None, None]
        d2 = di * di + dj * dj
        if blob.radius == 0.0:
            mass = np.where(d2 == 0.0, 1.0, 0.0)
        else:
            mass = np.exp(-d2 / (2.0 * blob.radius ** 2))
            # truncate: no support beyond three sigmas
            mass[d2 > (3.0 * blob.radius) ** 2] = 0.0
        values += spec.pressure_scale * mass

    if spec.noise_amplitude > 0.0:
        values += rng.normal(0.0, spec.noise_amplitude, size=values.shape)

    frames = np.clip(np.rint(values), 0, 255).astype(np.uint8)
    if snippet_id is None:
        snippet_id = f"synth-{spec.seed}"
    return PressureSnippet(frames=frames, label=label, infant_id=infant_id,
                           session=session, snippet_id=snippet_id)


@dataclass(frozen=True)
class RegimeSpec:
    """Parameter ranges for one movement regime of the planted-signal dataset."""

    freq_hz: tuple[float, float]
    amplitude: tuple[float, float]


# The two planted regimes mirror what distinguishes the classes in real
# recordings: absent fidgety movements show slower, larger-amplitude motion,
# present ones faster, smaller-amplitude motion.
FM_MINUS_REGIME = RegimeSpec(freq_hz=(0.8, 1.6), amplitude=(2.5, 4.0))
FM_PLUS_REGIME = RegimeSpec(freq_hz=(5.0, 8.0), amplitude=(0.5, 1.0))


def make_two_regime_dataset(n_infants: int = 20, snippets_per_infant: int = 6,
                            seed: int = 0, noise_amplitude: float = 1.0) -> Dataset:
    """Planted-signal dataset: per infant, half FM- and half FM+ snippets.

    Classes are separable by construction through their motion frequency
    and amplitude. Every infant contributes both classes so grouped
    cross-validation cannot shortcut through infant identity.
    """
    rng = np.random.default_rng(seed)
    snippets = []
    for infant in range(n_infants):
        infant_id = f"inf{infant:03d}"
        # mild per-infant variation in blob geometry, shared by both classes
        top = (float(rng.uniform(6.0, 9.0)), float(rng.uniform(13.0, 19.0)))
        bottom = (float(rng.uniform(19.0, 23.0)), float(rng.uniform(13.0, 19.0)))
        radius = float(rng.uniform(1.6, 2.4))
        for k in range(snippets_per_infant):
            fm_plus = k % 2 == 1
            regime = FM_PLUS_REGIME if fm_plus else FM_MINUS_REGIME
            label = LABEL_FM_PLUS if fm_plus else LABEL_FM_MINUS
            session = "T5" if fm_plus else "T1"
            spec = two_blob_spec(
                seed=int(rng.integers(0, 2 ** 31)),
                top_center=top,
                bottom_center=bottom,
                radius=radius,
                amplitude=float(rng.uniform(*regime.amplitude)),
                freq_hz=float(rng.uniform(*regime.freq_hz)),
                noise_amplitude=noise_amplitude,
                phase=float(rng.uniform(0.0, 2.0 * np.pi)),
            )
            snippets.append(generate_synthetic(
                spec, label=label, infant_id=infant_id, session=session,
                snippet_id=f"{infant_id}-s{k:02d}",
            ))
    return Dataset.in_memory(snippets, source=f"two-regime(seed={seed})")
