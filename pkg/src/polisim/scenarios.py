"""Built-in scenario configurations.

Five ready-made scenarios: a no-intervention baseline, the school-closure
and work-at-home pair, and the lockdown pair with and without the
government taking over wages of closed businesses.
"""

from __future__ import annotations

from .config import ScenarioConfig, parse_config

BASELINE = ""

CLOSE_SCHOOLS = """\
[[policies]]
kind = "close_schools"
trigger = "detected >= 1"
"""

WORK_AT_HOME = """\
[population]
telework_fraction = 1.0

[[policies]]
kind = "close_workplaces_telework"
trigger = "detected >= 1"
"""

LOCKDOWN_NO_SUBSIDY = """\
[economy]
fixed_costs_enabled = true

[[policies]]
kind = "close_nonessential_shops"
trigger = "detected >= 1"

[[policies]]
kind = "lockdown"
trigger = "detected >= 1"
"""

LOCKDOWN_SUBSIDY = """\
[[policies]]
kind = "close_nonessential_shops"
trigger = "detected >= 1"

[[policies]]
kind = "lockdown"
trigger = "detected >= 1"

[[policies]]
kind = "wage_takeover"
trigger = "detected >= 1"
"""

SCENARIOS: dict[str, str] = {
    "baseline": BASELINE,
    "close-schools": CLOSE_SCHOOLS,
    "work-at-home": WORK_AT_HOME,
    "lockdown-no-subsidy": LOCKDOWN_NO_SUBSIDY,
    "lockdown-subsidy": LOCKDOWN_SUBSIDY,
}


def scenario_names() -> list[str]:
    return list(SCENARIOS)


def load_scenario(name: str) -> ScenarioConfig:
    try:
        text = SCENARIOS[name]
    except KeyError:
        raise KeyError(
            f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}"
        ) from None
    return parse_config(text)
