import numpy as np
import pytest

from cevlab.transforms import ModelParams


@pytest.fixture
def p2():
    return ModelParams(2.0, 1.0)


@pytest.fixture(autouse=True)
def _quiet_numpy():
    with np.errstate(all="ignore"):
        yield
