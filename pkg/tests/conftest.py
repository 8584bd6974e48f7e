import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fracvi import build_grid, interval_mask


@pytest.fixture
def grid_pi():
    return build_grid(1, np.pi, 128)


@pytest.fixture
def grid_pi_256():
    return build_grid(1, np.pi, 256)


@pytest.fixture
def mask_unit(grid_pi):
    return interval_mask(grid_pi, -1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
