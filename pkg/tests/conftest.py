import os
from pathlib import Path

import numpy as np
import pytest

from asymcap.dmc import Dmc, bac, bec, bsc, identity, zchannel, random_dmc


@pytest.fixture(scope='module')
def assets_path():
    if os.path.basename(os.getcwd()) == 'tests':
        return Path('assets')
    else:
        return Path('tests/assets')


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20220401)


@pytest.fixture
def asymmetric_channel() -> Dmc:
    """The binary asymmetric test channel with crossovers 0.02 (from 0) and 0.2 (from 1)."""
    return bac(0.02, 0.2)


@pytest.fixture
def noiseless_channel() -> Dmc:
    return identity(2)


@pytest.fixture
def z_channel() -> Dmc:
    return zchannel(0.5)


@pytest.fixture(params=[bsc(0.11), bec(0.3), zchannel(0.3), bac(0.02, 0.2), bac(0.3, 0.05)],
                ids=['bsc', 'bec', 'zchannel', 'bac', 'bac-reversed'])
def binary_channel(request) -> Dmc:
    return request.param


@pytest.fixture
def random_binary_channels():
    def _generate(count: int, seed: int = 0, max_outputs: int = 8, sparsity: float = 0.0):
        generator = np.random.default_rng(seed)
        return [random_dmc(generator, 2, int(generator.integers(2, max_outputs + 1)), sparsity)
                for _ in range(count)]

    return _generate
