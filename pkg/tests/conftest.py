import os
from unittest.mock import patch

import numpy as np
import pytest
from fastapi.testclient import TestClient

from src.tentwave.config import ConfigService
from src.tentwave.core.mesh1d import Material, SpatialMesh, Tent, TentType
from src.tentwave.core.problems import ProblemSpec, left_moving_pulse
from src.tentwave.main import get_application


@pytest.fixture
def test_config():
    """Create test configuration with mocked environment variables"""
    test_env_vars = {
        "TENTWAVE_ENV": "test",
        "TENTWAVE_VERSION": "0.1.0-test",
        "TENTWAVE_LOG_JSON": "false",
        "TENTWAVE_DEFAULT_MARGIN": "0.9",
        "TENTWAVE_DEFAULT_SEED": "7",
        "TENTWAVE_POWER_NORM_CAP": "500",
    }

    with patch.dict(os.environ, test_env_vars):
        # Reset the global config service
        import src.tentwave.config

        src.tentwave.config._config_service = None
        config = ConfigService()
        src.tentwave.config._config_service = config
        yield config
        src.tentwave.config._config_service = None


@pytest.fixture
def app(test_config):
    """Create FastAPI test application"""
    return get_application()


@pytest.fixture
def client(app):
    """Create test client"""
    return TestClient(app)


@pytest.fixture
def unit_material():
    return Material.homogeneous()


@pytest.fixture
def jump_material():
    """Speed and impedance jump: c_loc = 1/2 on region 0, 2 on region 1"""
    return Material(c=1.0, kappa1=[4.0, 0.5], kappa2=[1.0, 0.5])


@pytest.fixture
def coarse_mesh():
    return SpatialMesh.uniform(1.0, 8)


@pytest.fixture
def interface_mesh():
    return SpatialMesh.piecewise_uniform([(0.0, 0.5, 0.125, 0), (0.5, 1.0, 0.125, 1)])


@pytest.fixture
def pulse_problem():
    """Left-moving Gaussian pulse with matched ends, up to t = 0.5"""
    return left_moving_pulse(final_time=0.5)


@pytest.fixture
def zero_problem(unit_material):
    def initial(x):
        return np.zeros_like(x), np.zeros_like(x)

    return ProblemSpec(material=unit_material, initial=initial, final_time=0.25, name="zero")


@pytest.fixture
def interior_tent():
    return Tent(center_vertex=1, tent_type=TentType.I, k=0.05, h_l=0.1, h_r=0.1, p_l=0.7, p_r=0.3, x=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
