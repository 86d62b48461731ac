from functools import lru_cache

import pytest

from swapoption.harness import load_scenario, run_scenario


@lru_cache(maxsize=None)
def run(name: str):
    return run_scenario(load_scenario(name))


@pytest.fixture
def scenario_run():
    return run
