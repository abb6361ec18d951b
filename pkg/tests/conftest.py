import numpy as np
import pytest

from dfrkit.params import SchemeParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# n=16 keeps schoolbook products cheap while q = 97 still admits an NTT (32 | 96)
SMALL = SchemeParams(n=16, q=97, k=2, r=8, L=4)
