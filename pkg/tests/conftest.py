import numpy as np
import pytest

from netbeam import ChannelRealization, PowerBudget


def rayleigh_mags(gen, n, r):
    """Magnitude pairs of unit-variance complex-Gaussian link gains."""
    f = gen.rayleigh(np.sqrt(0.5), (n, r))
    g = gen.rayleigh(np.sqrt(0.5), (n, r))
    return f, g


def realization_from_mags(f_mag, g_mag, f0_mag=None):
    f0 = complex(f0_mag) if f0_mag is not None else None
    return ChannelRealization(f=f_mag.astype(complex), g=g_mag.astype(complex), f0=f0)


@pytest.fixture
def two_relay_example():
    """The worked 2-relay case: P0 = P1 = P2 = 10, |f| = (1, 0.5), |g| = (1, 2)."""
    ch = ChannelRealization(f=[1 + 0j, 0.5 + 0j], g=[1 + 0j, 2 + 0j])
    budget = PowerBudget(p0=10.0, p=[10.0, 10.0])
    return ch, budget
