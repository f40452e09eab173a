from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import hrctrack as ht


@pytest.fixture(scope="session")
def grid3():
    return ht.GridSpec(3, 3)


@pytest.fixture(scope="session")
def walk3(grid3):
    return ht.build_random_walk(grid3, 0.4)


@pytest.fixture(scope="session")
def grid2():
    return ht.GridSpec(2, 2)


@pytest.fixture(scope="session")
def walk2(grid2):
    return ht.build_random_walk(grid2, 0.3)


@pytest.fixture(params=["numpy", "numba"])
def backend(request):
    name = request.param
    if name not in ht.available_backends():
        pytest.skip(f"{name} backend unavailable")
    with ht.use(name):
        yield name


def rng_for(*key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(list(key)))
