import numpy as np
import pytest

from striptrial.config import load_config
from striptrial.grid_design import TreatmentLevels, build_grid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_grid():
    return build_grid(12, 5)


@pytest.fixture
def levels():
    return TreatmentLevels((0.0, 35.0, 70.0, 105.0, 140.0))


@pytest.fixture
def smoke_config():
    # 31x10 grid, R=5: every pipeline path in seconds
    from striptrial.cli import bundled_config_path

    return load_config(bundled_config_path("smoke"))
