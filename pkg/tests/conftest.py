import numpy as np
import pytest

from semiflow.spectral import SpectralBasis


@pytest.fixture
def basis():
    return SpectralBasis(16, 1.0, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


SIGMA = np.array([[0.5, 0.2], [0.0, 0.3]])
