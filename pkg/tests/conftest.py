import numpy as np
import pytest

from commons.datasets import load_dataset, resolve_dataset
from models.RegressionModel import ModelData


def _random_data(seed: int, n: int = 30, beta=(1.0, 2.0), sigma: float = 1.0) -> ModelData:
    rng = np.random.default_rng(seed)
    design = np.column_stack([np.ones(n), rng.normal(size=n)])
    return ModelData(design, design @ np.asarray(beta) + sigma * rng.normal(size=n))


@pytest.fixture(scope="session")
def brain() -> ModelData:
    return load_dataset(resolve_dataset("brain_weight"))


@pytest.fixture(scope="session")
def first_word() -> ModelData:
    return load_dataset(resolve_dataset("first_word"))


@pytest.fixture
def make_data():
    """Factory of simulated two column samples: make_data(seed, n=30, beta=(1, 2), sigma=1)."""
    return _random_data


@pytest.fixture
def random_data() -> ModelData:
    return _random_data(11)
