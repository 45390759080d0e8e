import math

import numpy as np
import pytest
from fastapi.testclient import TestClient

from catsim.main import app
from catsim.schemas import CatParams, NoiseConfig
from catsim.services.circuit import melbourne_coupling
from catsim.services.noise import NoiseModel, load_calibration

@pytest.fixture(scope="function")
def client():
    """Create a test client for the HTTP service."""
    with TestClient(app) as test_client:
        yield test_client

@pytest.fixture(scope="session")
def melbourne():
    return melbourne_coupling()

@pytest.fixture(scope="session")
def calibration():
    """Bundled melbourne calibration table."""
    return load_calibration("melbourne-20200404")

@pytest.fixture(scope="function")
def noise(calibration):
    return NoiseModel(calibration)

@pytest.fixture(scope="function")
def idle_noise(calibration):
    return NoiseModel(calibration, NoiseConfig(include_idle=True))

@pytest.fixture(scope="function")
def rng():
    return np.random.default_rng(20200404)

@pytest.fixture(scope="session")
def half_pi():
    return CatParams(theta=math.pi / 2)
