import numpy as np
import pytest

from wpcn_maxmin.channel import ChannelSet, paper_fixture
from wpcn_maxmin.system import SystemParams


@pytest.fixture(scope="session")
def bench_channels():
    return paper_fixture()


@pytest.fixture(scope="session")
def bench_params():
    # 1 W budget, -50 dBm noise, 50% harvesting efficiency
    return SystemParams(power_budget=1.0, noise_power=1e-8, harvest_efficiency=0.5)


def random_channelset(rng, num_antennas, num_users, scale=1.0, reciprocal=True):
    def draw():
        return scale * (
            rng.standard_normal((num_antennas, num_users))
            + 1j * rng.standard_normal((num_antennas, num_users))
        ) / np.sqrt(2.0)

    g = draw()
    h = g.copy() if reciprocal else draw()
    return ChannelSet(G=g, H=h, reciprocal=reciprocal)


def random_covariance(rng, num_antennas, trace):
    a = rng.standard_normal((num_antennas, num_antennas)) + 1j * rng.standard_normal(
        (num_antennas, num_antennas)
    )
    s = a @ a.conj().T
    return trace * s / np.real(np.trace(s))


def random_receivers(rng, num_antennas, num_users):
    w = rng.standard_normal((num_antennas, num_users)) + 1j * rng.standard_normal(
        (num_antennas, num_users)
    )
    return w / np.linalg.norm(w, axis=0)
