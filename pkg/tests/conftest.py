import pathlib

import pytest

from aerialnet import LinkBudgetParams, AerialPlatform
from aerialnet._accel import NUMBA_ENABLED

DATA = pathlib.Path(__file__).resolve().parents[1] / "src" / "aerialnet" / "data"

requires_numba = pytest.mark.skipif(not NUMBA_ENABLED, reason="numba kernels disabled")


@pytest.fixture
def default_params():
    """Default link budget: 30 dBm, 10 MHz at 795.5 MHz."""
    return LinkBudgetParams()


@pytest.fixture
def platform300():
    return AerialPlatform((0.0, 0.0), 300.0)


@pytest.fixture
def data_dir():
    return DATA
