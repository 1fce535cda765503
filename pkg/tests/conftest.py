import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_image(rng):
    return rng.uniform(0.0, 255.0, (24, 31)).astype(np.float32)
