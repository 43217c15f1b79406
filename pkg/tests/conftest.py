import numpy as np
import pytest

from dybm_vol import kernels
from dybm_vol._accel import HAS_NUMBA

BACKENDS = ["numpy"] + (["numba"] if HAS_NUMBA else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return kernels.get_backend(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def price_csv(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text("date,close\n2020-01-01,100\n2020-01-02,101\n2020-01-03,99\n")
    return path
