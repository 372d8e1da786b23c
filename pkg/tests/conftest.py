"""Shared fixtures: the reference channel and timing used across the suite.

The reference point is the passive receiver from the default config
(R=0.225 um, r=2 um, D=5e3 um^2/s, v=1e3 um/s, beta=100/s) at
Tb=3e-4 s with 12 samples per symbol.
"""

import numpy as np
import pytest

from mcvdlab import ChannelParams, TimingConfig
from mcvdlab.channel import default_isi_length, discretize_cir
from mcvdlab.metrics import MetricConfig


@pytest.fixture(scope="session")
def passive_params():
    return ChannelParams(mode="passive", R=0.225, r=2.0, D=5e3, v=1e3, beta=100.0)


@pytest.fixture(scope="session")
def absorbing_params():
    return ChannelParams(mode="absorbing", R=0.225, r=2.0, D=5e3, v=1e3, beta=100.0)


@pytest.fixture(scope="session")
def timing():
    return TimingConfig(Tb=3e-4, M=12)


@pytest.fixture(scope="session")
def cir(passive_params, timing):
    L = default_isi_length(passive_params, timing)
    return discretize_cir(passive_params, timing, L)


@pytest.fixture(scope="session")
def metric_cfg(timing):
    return MetricConfig.from_timing(timing)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
