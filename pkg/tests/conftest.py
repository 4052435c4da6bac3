import numpy as np
import pytest

from llelab.config import load_shipped_config
from llelab.grid import Grid
from llelab.pipeline import solve_configured_wave


@pytest.fixture(scope="session")
def shipped_config():
    return load_shipped_config()


@pytest.fixture(scope="session")
def wave(shipped_config):
    """The shipped stable-regime wave (Newton-converged once per session)."""
    w = solve_configured_wave(shipped_config)
    assert w.residual_l2 < 1e-10
    return w


@pytest.fixture(scope="session")
def sim_grid(wave):
    """Modest simulation grid: 16 periods at full per-period resolution."""
    return wave.simulation_grid(16, 64)


@pytest.fixture()
def unit_grid():
    return Grid(128, 2.0 * np.pi)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
