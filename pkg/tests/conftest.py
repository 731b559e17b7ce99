import numpy as np
import pytest

from plc_synth.data_model import ChannelEnsemble, FrequencyGrid, MimoChannelEnsemble
from plc_synth.fixtures import mimo_fixture, siso_fixture


@pytest.fixture
def small_grid() -> FrequencyGrid:
    return FrequencyGrid(f_start=1e6, f_end=1e6 + 63 * 1e5, m_samples=64)


@pytest.fixture
def siso_ens() -> ChannelEnsemble:
    return siso_fixture()


@pytest.fixture
def mimo_ens() -> MimoChannelEnsemble:
    return mimo_fixture()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
