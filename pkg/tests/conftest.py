import numpy as np
import pytest

from mirroratom import default_config


@pytest.fixture(scope="session")
def table1():
    """Measured device profile used throughout the paper-style checks."""
    return default_config()


@pytest.fixture(scope="session")
def fit_example_config():
    """Bare-rate profile tuned so the 4.8 GHz bias carries exactly
    Gamma_1/2pi = 8 MHz and Gamma_phi/2pi = 0.5 MHz."""
    return default_config(lifetime_model="bare",
                          gamma1_bare_hz=29804436.132180344,
                          gamma_phi_hz=0.5e6)


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
