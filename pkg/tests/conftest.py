"""Shared fixtures.

The SDR solve is the expensive step, so one representative design (the fixed
placements used throughout the experiment scripts) is solved once per session
and reused by every test that just needs a valid solution.
"""

import numpy as np
import pytest

from dfrc_privacy import (AngleGrid, Scenario, build_grid, design_precoder,
                          generate_channels)

FIXED_USERS = ((800.0, 100.0), (750.0, 300.0))
FIXED_TARGET = (550.0, 400.0)


def make_scenario(**kw):
    base = dict(bs_position=(0.0, 0.0), user_positions=FIXED_USERS,
                target_position=FIXED_TARGET, M_T=8, N_R=2, K=2,
                sigma_k_sq=1e-13)
    base.update(kw)
    return Scenario(**base)


def random_scenario(rng, **kw):
    """Uniform node placements over the default 1000 m search area."""
    users = tuple(tuple(rng.uniform(0.0, 1000.0, size=2)) for _ in range(2))
    target = tuple(rng.uniform(0.0, 1000.0, size=2))
    return make_scenario(user_positions=users, target_position=target, **kw)


@pytest.fixture(scope="session")
def scenario():
    return make_scenario()


@pytest.fixture(scope="session")
def channels(scenario):
    return generate_channels(scenario, [7, 1])


@pytest.fixture(scope="session")
def design(scenario, channels):
    return design_precoder(scenario, channels, Gamma_dB=12.0, rng_seed=[7, 2])


@pytest.fixture(scope="session")
def angle_grid():
    return AngleGrid.uniform(0.0, 90.0, 0.1)


@pytest.fixture(scope="session")
def grid():
    return build_grid(1000.0, 100.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
