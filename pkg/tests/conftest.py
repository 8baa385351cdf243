import numpy as np
import pytest

from srlm.fields import constant_family, fourier10_family, linear_family, trig_family


@pytest.fixture(scope="session")
def families():
    return {
        "constant": constant_family(),
        "linear": linear_family(),
        "trig": trig_family(),
        "fourier10": fourier10_family(),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
