from __future__ import annotations

import numpy as np
import pytest

from rionset import DEFAULT_PARAMS, DEFAULT_X0, deterministic_onset_time, integrate_ode


@pytest.fixture(scope="session")
def default_trajectory():
    """Paper-default trajectory, shared across tests (read-only)."""
    return integrate_ode(DEFAULT_PARAMS, DEFAULT_X0, dt=1e-3, t_max=15.0)


@pytest.fixture(scope="session")
def default_onset(default_trajectory):
    onset = deterministic_onset_time(default_trajectory, 0.1)
    assert onset.hit
    return onset


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
