import os
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from config import settings as S  # noqa: E402
from data.layout import generate_layout  # noqa: E402
from data.scenario import (  # noqa: E402
    PolicySpec, PropagationParams, Scenario, SiteSpec, TrafficSpec,
)


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the slow directional reproduction tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def reference_path():
    return S.DEFAULT_SCENARIO


@pytest.fixture
def make_scenario():
    """Small hex patch (7 sites, no jitter) with knobs for the engine tests."""
    def _make(n_sites=7, arrival_rate=1.0, sim_duration=60.0, sigma=0.0, speed=1.0,
              seed=1, warmup=0.0, **policy_kw):
        sites = generate_layout(n_sites, jitter=0.0, seed=3)
        return Scenario(
            sites=tuple(sites),
            propagation=PropagationParams(shadowing_sigma_db=sigma),
            traffic=TrafficSpec(arrival_rate=arrival_rate, user_speed=speed),
            policy=PolicySpec(**policy_kw),
            sim_duration=sim_duration,
            rng_seed=seed,
            warmup_fraction=warmup,
        )
    return _make


@pytest.fixture
def single_cell():
    """One site at the origin, no arrivals, static users, no shadowing."""
    return Scenario(
        sites=(SiteSpec(0, (0.0, 0.0)),),
        propagation=PropagationParams(shadowing_sigma_db=0.0),
        traffic=TrafficSpec(arrival_rate=0.0, user_speed=0.0),
        sim_duration=20.0,
        warmup_fraction=0.0,
    )


@pytest.fixture
def two_cells():
    """Sites at (0, 0) and (1000, 0), no arrivals, static users, no shadowing."""
    return Scenario(
        sites=(SiteSpec(0, (0.0, 0.0)), SiteSpec(1, (1000.0, 0.0), band_index=1)),
        propagation=PropagationParams(shadowing_sigma_db=0.0),
        traffic=TrafficSpec(arrival_rate=0.0, user_speed=0.0),
        sim_duration=20.0,
        warmup_fraction=0.0,
    )
