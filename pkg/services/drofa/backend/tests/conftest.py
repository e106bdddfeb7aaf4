import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from backend.app.models.specs import ObjectiveSpec
from backend.app.repositories import (
    make_quadratic_federation,
    make_synthetic_federation,
)
from backend.app.schemas.config import AlgoConfig

settings.register_profile(
    "drofa",
    max_examples=200,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("drofa")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def two_quadratics():
    """c_1 = (1, 0), c_2 = (-1, 0), curvature 1"""
    return make_quadratic_federation([[1.0, 0.0], [-1.0, 0.0]])


@pytest.fixture
def five_quadratics():
    centers = [[2.0, 0.0], [0.0, 1.0], [-1.0, -1.0], [0.5, -2.0], [-2.0, 1.5]]
    return make_quadratic_federation(centers, samples_per_client=4, noise=0.3, seed=7)


@pytest.fixture
def logistic_fed():
    return make_synthetic_federation(
        n_clients=4,
        dim=2,
        samples_per_client=20,
        seed=3,
        objective=ObjectiveSpec(kind="logistic_regression", l2_term=0.01),
        holdout_per_client=10,
    )


@pytest.fixture
def make_algo():
    """AlgoConfig 생성 (기본값 + override)"""

    def factory(**overrides) -> AlgoConfig:
        data = {
            "algorithm": "drfa",
            "T": 16,
            "tau": 4,
            "m": 2,
            "eta": 0.1,
            "gamma": 0.05,
        }
        data.update(overrides)
        return AlgoConfig.model_validate(data)

    return factory
