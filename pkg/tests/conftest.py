from pathlib import Path

import numpy as np
import pytest

from adaradar.tensor import RadarTensor, generate_scene, random_scene_spec

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_tensor(rng, shape=(2, 16, 16), scale=1.0):
    return RadarTensor((scale * rng.standard_normal(shape)).astype(np.float32))


def sparse_scene(seed, dims=(2, 64, 64), n_targets=4, amplitude=(10.0, 100.0), noise_sigma=1.0, clutter=0.0):
    return generate_scene(random_scene_spec(seed, dims, n_targets, amplitude, noise_sigma, clutter=clutter))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
