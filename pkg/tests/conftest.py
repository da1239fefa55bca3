import numpy as np
import pytest

from fibergate.params import ParameterSet, PulseConfig, validate


@pytest.fixture(scope="session")
def fast_short():
    """Reduced short-regime configuration: small mode cutoff, narrow pulse."""
    return validate(ParameterSet(
        gamma=1.0, kappa=1.0, g_a=10.0, g_b=10.0, delta=500.0,
        delta_prime=200.0, delta_omega=7.5, n_fiber_modes=3,
        pulse=PulseConfig(omega0=6.0, t_c=0.0, delta_t=40.0),
    ))


@pytest.fixture(scope="session")
def cal_short():
    """Short-regime configuration wide enough for a pi crossing, still cheap."""
    return validate(ParameterSet(
        gamma=1.0, kappa=1.0, g_a=10.0, g_b=10.0, delta=500.0,
        delta_prime=200.0, delta_omega=7.5, n_fiber_modes=3,
        pulse=PulseConfig(omega0=6.0, t_c=0.0, delta_t=60.0),
    ))


@pytest.fixture(scope="session")
def fast_long():
    """Reduced long-regime configuration: short fiber, narrow photon."""
    return validate(ParameterSet(
        gamma=1.0, kappa=1.0, g_a=8.0, g_b=8.0, delta=0.0,
        delta_prime=160.0, fiber_length=150.0, delta_omega=None,
        pulse=PulseConfig(omega0=0.0, t_c=60.0, delta_t=20.0, shape="sech_emit"),
    ))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
