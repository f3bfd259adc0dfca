import pytest

from polisim.config import ScenarioConfig, parse_config
from polisim.needs import NeedsCalibration


@pytest.fixture
def default_config() -> ScenarioConfig:
    return parse_config("")


@pytest.fixture
def default_cal(default_config) -> NeedsCalibration:
    return NeedsCalibration.from_config(default_config)


def tiny_config(**extra) -> ScenarioConfig:
    """A one-family world: small and fast for unit tests."""
    text = """\
[run]
ticks_total = 8

[epidemic]
initial_infected = 1

[population]
target = 3

[population.household_distribution]
family = 1.0
student_shared = 0.0
retirement_home = 0.0
three_generation = 0.0
co_parenting = 0.0
"""
    for section, body in extra.items():
        text += f"\n[{section}]\n"
        for k, v in body.items():
            text += f"{k} = {v}\n"
    return parse_config(text)
