import numpy as np
import pytest

from matmotion.dataset import FRAME_COUNT, GRID_COLS, GRID_ROWS, PressureSnippet


@pytest.fixture
def random_snippet():
    def make(seed=0, label="FM+", infant_id="inf000", session="T5",
             snippet_id=None):
        rng = np.random.default_rng(seed)
        frames = rng.integers(0, 256, size=(FRAME_COUNT, GRID_ROWS, GRID_COLS),
                              dtype=np.uint8)
        return PressureSnippet(
            frames=frames, label=label, infant_id=infant_id, session=session,
            snippet_id=snippet_id or f"rand-{seed}",
        )
    return make


@pytest.fixture
def zero_snippet():
    frames = np.zeros((FRAME_COUNT, GRID_ROWS, GRID_COLS), dtype=np.uint8)
    return PressureSnippet(frames=frames, label="FM-", infant_id="inf000",
                           session="T1", snippet_id="zeros")
