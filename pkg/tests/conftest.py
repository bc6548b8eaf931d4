import dataclasses

import numpy as np
import pytest

from plugpull.config import ScenarioConfig
from plugpull.sim import run_scenario


@pytest.fixture(scope="session")
def default_config() -> ScenarioConfig:
    return ScenarioConfig().validate()


@pytest.fixture(scope="session")
def baseline_run(default_config):
    return run_scenario(dataclasses.replace(default_config, mode="baseline"))


@pytest.fixture(scope="session")
def proposed_run(default_config):
    return run_scenario(dataclasses.replace(default_config, mode="proposed"))


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20260810)
