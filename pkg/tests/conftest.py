import numpy as np
import pytest

from sociolorenz.model_core import ParamSet

# parameter sets used throughout: chaotic attractor, sink, stable foci
CHAOTIC = ParamSet(10.0, 28.0, 8.0 / 3.0)
SINK = ParamSet(2.0, 0.5, 1.0)
FOCI = ParamSet(10.0, 20.0, 2.7)


@pytest.fixture
def chaotic():
    return CHAOTIC


@pytest.fixture
def sink():
    return SINK


@pytest.fixture
def foci():
    return FOCI


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_params(rng, n, r0_range=(0.1, 40.0)):
    out = []
    for _ in range(n):
        out.append(
            ParamSet(
                rng.uniform(0.1, 20.0),
                rng.uniform(*r0_range),
                rng.uniform(0.1, 10.0),
            )
        )
    return out
