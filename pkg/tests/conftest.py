from dataclasses import replace

import pytest

from secbeam.harness import resolve_scenario


def fixture_scenario(name: str, **env_overrides):
    s = resolve_scenario(name)
    if env_overrides:
        s = replace(s, environment=replace(s.environment, **env_overrides))
    return s


@pytest.fixture
def s1_quiet():
    """scenario1 geometry without shadowing."""
    return fixture_scenario("scenario1", shadowing_sigma=0.0)


@pytest.fixture
def lab():
    return fixture_scenario("lab_attack")
