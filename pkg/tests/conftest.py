import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from boxtorus.lattice import random_field

settings.register_profile(
    "boxtorus", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("boxtorus")

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def field_from_seed(seed, m=8, decay=1.0, kernel_free=False):
    return random_field(m, np.random.default_rng(seed), decay=decay, kernel_free=kernel_free)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
