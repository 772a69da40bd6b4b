import numpy as np
import pytest

from zpsync import DelayProfile, NoiseMixture, SystemConfig


@pytest.fixture(scope="session")
def paper_config() -> SystemConfig:
    """Link dimensions used throughout the reference experiments."""
    return SystemConfig(
        n_data=512, n_zero=20, n_taps=10, n_blocks=10, mod_order=128, snr_db=10.0
    )


@pytest.fixture(scope="session")
def sim_profile() -> DelayProfile:
    """Unit-energy mildly decaying profile (default simulation channel)."""
    return DelayProfile.exponential(1.0, 0.05, 10, normalized=True)


@pytest.fixture(scope="session")
def validation_profile() -> DelayProfile:
    """Strongly decaying profile used for variance-profile unit checks."""
    return DelayProfile.exponential(0.396, 0.5, 10)


@pytest.fixture(scope="session")
def impulsive_mixture() -> NoiseMixture:
    return NoiseMixture.impulsive(0.99, 1.0, 100.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
