from __future__ import annotations

import json

import numpy as np
import pytest

from hspace.epsilon_problem import SolverSettings
from hspace.formulas import fourier_background, product_background, torus_background
from hspace.metric_geometry import DISTANCE_CACHE

SHORT_SCHEDULE = (0.8, 0.4)
FIT_SCHEDULE = (0.8, 0.4, 0.2)
SMALL_BACKGROUND = {"complex_dim": 1, "points_per_axis": 16, "omega_diagonal": [1.0], "alpha_diagonal": [1.0]}
SMALL_SOLVER = {"time_steps": 9}


@pytest.fixture(autouse=True)
def clear_distance_cache():
    DISTANCE_CACHE.clear()
    yield
    DISTANCE_CACHE.clear()


@pytest.fixture
def torus_bg():
    return torus_background(16)


@pytest.fixture
def fourier_bg():
    return fourier_background(16)


@pytest.fixture
def product_bg():
    return product_background(8)


@pytest.fixture
def settings():
    return SolverSettings(time_steps=9)


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


@pytest.fixture
def config_file(tmp_path):
    """Writes a small configuration into tmp_path; sections given as keyword arguments override the defaults."""

    def write(name: str = "config.json", **sections) -> str:
        options = {"background": dict(SMALL_BACKGROUND), "solver": dict(SMALL_SOLVER),
                   "epsilon_schedule": list(SHORT_SCHEDULE), "output_dir": str(tmp_path / "out")}
        options.update(sections)
        path = tmp_path / name
        path.write_text(json.dumps(options))
        return str(path)

    return write


@pytest.fixture
def schedule():
    return SHORT_SCHEDULE


@pytest.fixture
def fit_schedule():
    """Enough epsilons for the d + a eps^2 fit to have a residual."""
    return FIT_SCHEDULE
