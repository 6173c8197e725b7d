import numpy as np
import pytest

from quadtrack.system import make_system


def random_system(rng, n=3, m=2, scale=1.0):
    return make_system(
        scale * rng.uniform(-1, 1, (n, n)),
        rng.uniform(-1, 1, (n, m)),
        scale * rng.uniform(-1, 1, (n, n, n)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
