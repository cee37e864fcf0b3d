import pytest

from scenario import Scenario, build_context


@pytest.fixture(scope="session")
def desk_scenario():
    """N = 4, M = 16, upsilon = 2 m, r = 4 bits/s/Hz."""
    return Scenario(upsilon_m=2.0, target_rate=4.0, seed=7)


@pytest.fixture(scope="session")
def desk_context(desk_scenario):
    ctx, _ = build_context(desk_scenario)
    return ctx


@pytest.fixture(scope="session")
def desk_config(desk_scenario):
    return desk_scenario.optimizer_config(rng_seed=11)
