"""Discrete-time agent-based simulator coupling needs-driven behaviour,
an SEIR-style epidemic, and a closed-circuit economy, for comparing
policy interventions (school closure, lockdown, wage subsidies, testing)
across health, social, and economic outcomes."""

__version__ = "0.1.0"

from .config import (
    ConfigError,
    ConfigSyntaxError,
    ConfigConstraintError,
    UnknownKeyError,
    ScenarioConfig,
    parse_config,
    serialize_config,
)
from .world import World, generate_population, step_world
from .harness import run_single, run_batch, write_outputs

__all__ = [
    "ConfigError",
    "ConfigSyntaxError",
    "ConfigConstraintError",
    "UnknownKeyError",
    "ScenarioConfig",
    "parse_config",
    "serialize_config",
    "World",
    "generate_population",
    "step_world",
    "run_single",
    "run_batch",
    "write_outputs",
]
