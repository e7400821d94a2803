import pytest
from hypothesis import settings

from spinphoton.levels import Table3Inputs, derive_table3, solve_levels
from spinphoton.transitions import transition_table

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def inputs():
    return Table3Inputs(g_s_g=2.242, E_ge=258e3, delta32=7.26e3, delta43=12.6e3, delta21=5.28e3, hbar_omega_ph=6.15e3)


@pytest.fixture(scope="session")
def derived(inputs):
    return derive_table3(inputs)


@pytest.fixture(scope="session")
def params(derived):
    return derived[0]


@pytest.fixture(scope="session")
def weak_levels(params):
    return solve_levels(params)


@pytest.fixture(scope="session")
def weak_table(weak_levels):
    return transition_table(weak_levels)
