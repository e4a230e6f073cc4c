import numpy as np
import pytest

from patchpick.imagecore import Raster


def random_raster(rng, height, width, channels=3) -> Raster:
    return Raster(rng.integers(0, 256, (height, width, channels), dtype=np.uint8))


def constant_raster(value, height, width, channels=3) -> Raster:
    return Raster(np.full((height, width, channels), value, dtype=np.uint8))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
