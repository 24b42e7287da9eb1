import numpy as np
import pytest

from lq_explore import unit_model, validate_model


@pytest.fixture(scope="session")
def unit():
    """The all-ones environment used by the experiments, plus derived sums."""
    p = unit_model()
    return p, validate_model(p)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
