"""Scenario configuration: schema, defaults, TOML parsing and serialization.

A scenario is a single TOML document.  Every key has a default, so the empty
document is a valid baseline configuration.  Unknown keys are rejected with
their dotted path; constraint violations raise :class:`ConfigConstraintError`.
``parse_config(serialize_config(cfg))`` is the identity.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields, is_dataclass
from typing import Any

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib


class ConfigError(Exception):
    """Base class for configuration problems."""


class ConfigSyntaxError(ConfigError):
    """The config text is not well-formed TOML."""


class UnknownKeyError(ConfigError):
    """The config contains a key not in the schema."""


class ConfigConstraintError(ConfigError):
    """A value violates a documented constraint."""


# Activity kinds, in deliberation tie-break order.  The integer codes are
# used throughout the engine; do not reorder.
ACTIVITY_KINDS = (
    "rest_at_home",
    "work_at_office",
    "work_at_home",
    "attend_school",
    "stay_home",
    "shop_essential",
    "shop_nonessential",
    "leisure",
    "visit_doctor",
)

NEED_NAMES = ("safety", "belonging", "self_esteem", "autonomy", "survival")

PLACE_KINDS = (
    "home",
    "essential_shop",
    "nonessential_shop",
    "workplace",
    "school",
    "hospital",
    "leisure",
    "station",
)

HOUSEHOLD_KINDS = (
    "family",
    "student_shared",
    "retirement_home",
    "three_generation",
    "co_parenting",
)

POLICY_KINDS = (
    "close_schools",
    "close_workplaces_telework",
    "close_nonessential_shops",
    "lockdown",
    "social_distancing",
    "testing",
    "wage_takeover",
)

AGE_GROUPS = ("child", "student", "worker", "retiree")


@dataclass
class RunSection:
    ticks_total: int = 480
    ticks_per_day: int = 4
    runs: int = 40
    base_seed: int = 42


@dataclass
class HouseholdDistribution:
    family: float = 0.45
    student_shared: float = 0.15
    retirement_home: float = 0.05
    three_generation: float = 0.20
    co_parenting: float = 0.15


@dataclass
class PopulationSection:
    target: int = 330
    telework_fraction: float = 0.5
    commuter_fraction: float = 0.3
    mean_cluster_size: int = 6
    household_distribution: HouseholdDistribution = field(
        default_factory=HouseholdDistribution
    )


@dataclass
class ContagionBase:
    home: float = 0.06
    essential_shop: float = 0.06
    nonessential_shop: float = 0.06
    workplace: float = 0.16
    school: float = 0.05
    hospital: float = 0.07
    leisure: float = 0.14
    station: float = 0.16


@dataclass
class PlaceCapacity:
    home: int = 10
    essential_shop: int = 40
    nonessential_shop: int = 40
    workplace: int = 20
    school: int = 120
    hospital: int = 60
    leisure: int = 30
    station: int = 80


@dataclass
class PlacesSection:
    agents_per_essential_shop: int = 60
    agents_per_nonessential_shop: int = 45
    agents_per_leisure: int = 50
    workers_per_workplace: int = 15
    children_per_school: int = 15
    shop_staff: int = 4
    contagion_base: ContagionBase = field(default_factory=ContagionBase)
    capacity: PlaceCapacity = field(default_factory=PlaceCapacity)


@dataclass
class NeedLevels:
    safety: float = 0.0
    belonging: float = 0.0
    self_esteem: float = 0.0
    autonomy: float = 0.0
    survival: float = 0.0


@dataclass
class SubneedDecay:
    risk_avoidance: float = 0.01
    compliance: float = 0.01
    financial_safety: float = 0.005


@dataclass
class SafetyWeights:
    risk_avoidance: float = 0.4
    compliance: float = 0.4
    financial_safety: float = 0.2


@dataclass
class NeedsSection:
    thresholds: NeedLevels = field(
        default_factory=lambda: NeedLevels(0.6, 0.6, 0.5, 0.45, 0.7)
    )
    decay: NeedLevels = field(
        default_factory=lambda: NeedLevels(0.0, 0.02, 0.015, 0.015, 0.0)
    )
    importance: NeedLevels = field(
        default_factory=lambda: NeedLevels(0.25, 0.20, 0.15, 0.15, 0.25)
    )
    importance_jitter: float = 0.2
    subneed_decay: SubneedDecay = field(default_factory=SubneedDecay)
    safety_weights: SafetyWeights = field(default_factory=SafetyWeights)
    include_financial_safety: bool = True
    food_full_days: float = 14.0
    financial_survival_scale: int = 1400
    financial_safety_scale: int = 4000
    risk_scale: float = 0.6
    compliance_break_scale: float = 1.0
    conformity_scale: float = 0.10
    sick_rest_multiplier: float = 3.0
    sick_neglect_decay: float = 0.05
    tired_outing_penalty: float = 0.03
    gains: dict[str, dict[str, float]] = field(default_factory=dict)


# Default per-activity gains.  Keys: the five needs plus the food_safety,
# risk_avoidance and compliance subneeds.  Anything omitted is 0.
DEFAULT_GAINS: dict[str, dict[str, float]] = {
    "rest_at_home": {"survival": 0.30, "risk_avoidance": 0.08},
    "stay_home": {"survival": 0.05, "risk_avoidance": 0.10, "compliance": 0.02},
    "work_at_home": {"safety": 0.06, "self_esteem": 0.10, "belonging": 0.04,
                     "autonomy": 0.02, "compliance": 0.05,
                     "risk_avoidance": 0.08},
    "work_at_office": {"safety": 0.08, "self_esteem": 0.15, "belonging": 0.06,
                       "autonomy": 0.02, "compliance": 0.05},
    "attend_school": {"safety": 0.05, "belonging": 0.10, "self_esteem": 0.10,
                      "compliance": 0.05},
    "shop_essential": {"food_safety": 0.20, "autonomy": 0.05, "compliance": 0.02},
    "shop_nonessential": {"belonging": 0.08, "self_esteem": 0.10, "autonomy": 0.12},
    "leisure": {"belonging": 0.25, "self_esteem": 0.05, "autonomy": 0.12},
    "visit_doctor": {"survival": 0.20},
}

GAIN_KEYS = NEED_NAMES + ("food_safety", "risk_avoidance", "compliance")


@dataclass
class CompartmentRates:
    i1: float = 0.0
    i2: float = 0.0
    o1: float = 0.0
    o2: float = 0.0


@dataclass
class TestingSection:
    capacity_per_day: int = 0
    symptomatic_only: bool = True
    sensitivity: float = 1.0


@dataclass
class EpidemicSection:
    initial_infected: int = 4
    transmissibility: float = 1.0
    density_exponent: float = 1.0
    incubation_days_min: int = 2
    incubation_days_max: int = 4
    asymptomatic_fraction: float = 0.3
    p_visit_doctor: float = 0.25
    p_late_doctor: float = 0.10
    p_waning: float = 0.0
    child_susceptibility: float = 0.5
    symptomatic_home_days: int = 1
    p_recover: CompartmentRates = field(
        default_factory=lambda: CompartmentRates(0.10, 0.12, 0.16, 0.16)
    )
    p_die: CompartmentRates = field(
        default_factory=lambda: CompartmentRates(0.015, 0.018, 0.012, 0.012)
    )
    testing: TestingSection = field(default_factory=TestingSection)


@dataclass
class AgeGroupMoney:
    child: int = 200
    student: int = 500
    worker: int = 1000
    retiree: int = 800


@dataclass
class PlaceKindMoney:
    essential_shop: int = 5000
    nonessential_shop: int = 5000
    workplace: int = 200000
    leisure: int = 3000
    school: int = 0
    hospital: int = 0


@dataclass
class EconomySection:
    wage_per_day: int = 120
    tax_rate: float = 0.10
    subsidy_per_unemployed: int = 60
    public_service_cost: int = 300
    price_essential_per_day: int = 25
    nonessential_spend: int = 30
    leisure_spend: int = 20
    restock_target_days: int = 14
    initial_stock_days: int = 14
    fixed_cost_per_day: int = 500
    fixed_costs_enabled: bool = False
    allow_deficit: bool = True
    government_reserves: int = 500000
    initial_wealth: AgeGroupMoney = field(default_factory=AgeGroupMoney)
    initial_place_wealth: PlaceKindMoney = field(default_factory=PlaceKindMoney)


@dataclass
class PolicyConfig:
    kind: str = ""
    trigger: str = "detected >= 1"
    release: str = ""
    distancing_multiplier: float = 0.5


@dataclass
class ScenarioConfig:
    run: RunSection = field(default_factory=RunSection)
    population: PopulationSection = field(default_factory=PopulationSection)
    places: PlacesSection = field(default_factory=PlacesSection)
    needs: NeedsSection = field(default_factory=NeedsSection)
    epidemic: EpidemicSection = field(default_factory=EpidemicSection)
    economy: EconomySection = field(default_factory=EconomySection)
    policies: list[PolicyConfig] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Loading

def _type_name(tp: type) -> str:
    return getattr(tp, "__name__", str(tp))


def _coerce_scalar(value: Any, tp: type, path: str) -> Any:
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigConstraintError(f"{path}: expected bool, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigConstraintError(f"{path}: expected integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigConstraintError(f"{path}: expected number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigConstraintError(f"{path}: expected string, got {value!r}")
        return value
    raise AssertionError(f"unhandled scalar type {_type_name(tp)}")


def _load_dataclass(cls: type, data: Any, path: str, base: Any = None) -> Any:
    """Overlay ``data`` onto a default instance, so a partial nested table
    keeps the configured defaults for its untouched siblings."""
    if not isinstance(data, dict):
        raise ConfigConstraintError(f"{path or cls.__name__}: expected a table")
    known = {f.name: f for f in fields(cls)}
    obj = base if base is not None else cls()
    for key, value in data.items():
        sub = f"{path}.{key}" if path else key
        if key not in known:
            raise UnknownKeyError(f"unknown key: {sub}")
        ftype = known[key].type
        if isinstance(ftype, str):
            ftype = _resolve_type(ftype)
        if is_dataclass(ftype):
            setattr(obj, key, _load_dataclass(ftype, value, sub,
                                              getattr(obj, key)))
        elif ftype in (int, float, bool, str):
            setattr(obj, key, _coerce_scalar(value, ftype, sub))
        elif key == "gains":
            setattr(obj, key, _load_gains(value, sub))
        elif key == "policies":
            setattr(obj, key, _load_policies(value, sub))
        else:  # pragma: no cover
            raise AssertionError(f"unhandled field type for {sub}")
    return obj


_TYPE_MAP: dict[str, Any] = {}


def _resolve_type(name: str) -> Any:
    if not _TYPE_MAP:
        for obj in list(globals().values()):
            if is_dataclass(obj) and isinstance(obj, type):
                _TYPE_MAP[obj.__name__] = obj
        for scalar in (int, float, bool, str):
            _TYPE_MAP[scalar.__name__] = scalar
    base = name.split("[")[0].strip()
    return _TYPE_MAP.get(base, name)


def _load_gains(data: Any, path: str) -> dict[str, dict[str, float]]:
    if not isinstance(data, dict):
        raise ConfigConstraintError(f"{path}: expected a table of activity tables")
    out: dict[str, dict[str, float]] = {}
    for act, table in data.items():
        if act not in ACTIVITY_KINDS:
            raise UnknownKeyError(f"unknown key: {path}.{act}")
        if not isinstance(table, dict):
            raise ConfigConstraintError(f"{path}.{act}: expected a table")
        row: dict[str, float] = {}
        for need, gain in table.items():
            if need not in GAIN_KEYS:
                raise UnknownKeyError(f"unknown key: {path}.{act}.{need}")
            row[need] = _coerce_scalar(gain, float, f"{path}.{act}.{need}")
        out[act] = row
    return out


def _load_policies(data: Any, path: str) -> list[PolicyConfig]:
    if not isinstance(data, list):
        raise ConfigConstraintError(f"{path}: expected an array of tables")
    return [
        _load_dataclass(PolicyConfig, item, f"{path}[{i}]")
        for i, item in enumerate(data)
    ]


def config_from_dict(data: dict[str, Any]) -> ScenarioConfig:
    """Build a :class:`ScenarioConfig` from a parsed TOML mapping."""
    cfg = _load_dataclass(ScenarioConfig, data, "")
    validate_config(cfg)
    return cfg


def parse_config(text: str) -> ScenarioConfig:
    """Parse TOML scenario text; the empty document yields all defaults."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigSyntaxError(str(exc)) from exc
    return config_from_dict(data)


# ---------------------------------------------------------------------------
# Validation

def _check_unit(value: float, path: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise ConfigConstraintError(f"{path}: must be in [0, 1], got {value}")


def validate_config(cfg: ScenarioConfig) -> None:
    run = cfg.run
    if run.ticks_per_day < 1:
        raise ConfigConstraintError("run.ticks_per_day: must be >= 1")
    if run.ticks_total < 0:
        raise ConfigConstraintError("run.ticks_total: must be >= 0")
    if run.runs < 1:
        raise ConfigConstraintError("run.runs: must be >= 1")

    pop = cfg.population
    if pop.target <= 0:
        raise ConfigConstraintError("population.target: must be > 0")
    dist = pop.household_distribution
    total = 0.0
    for kind in HOUSEHOLD_KINDS:
        frac = getattr(dist, kind)
        if frac < 0:
            raise ConfigConstraintError(
                f"population.household_distribution.{kind}: negative fraction"
            )
        total += frac
    if abs(total - 1.0) > 1e-9:
        raise ConfigConstraintError(
            f"population.household_distribution: fractions sum to {total}, not 1"
        )
    _check_unit(pop.telework_fraction, "population.telework_fraction")
    _check_unit(pop.commuter_fraction, "population.commuter_fraction")
    if pop.mean_cluster_size < 1:
        raise ConfigConstraintError("population.mean_cluster_size: must be >= 1")

    for kind in PLACE_KINDS:
        _check_unit(getattr(cfg.places.contagion_base, kind),
                    f"places.contagion_base.{kind}")
        if getattr(cfg.places.capacity, kind) < 1:
            raise ConfigConstraintError(f"places.capacity.{kind}: must be >= 1")

    nd = cfg.needs
    for need in NEED_NAMES:
        thr = getattr(nd.thresholds, need)
        if not 0.0 < thr < 1.0:
            raise ConfigConstraintError(
                f"needs.thresholds.{need}: must be in (0, 1), got {thr}"
            )
        if getattr(nd.decay, need) < 0:
            raise ConfigConstraintError(f"needs.decay.{need}: must be >= 0")
        if getattr(nd.importance, need) <= 0:
            raise ConfigConstraintError(f"needs.importance.{need}: must be > 0")
    if nd.food_full_days <= 0:
        raise ConfigConstraintError("needs.food_full_days: must be > 0")

    epi = cfg.epidemic
    if epi.transmissibility < 0:
        raise ConfigConstraintError("epidemic.transmissibility: must be >= 0")
    if epi.incubation_days_min < 0 or epi.incubation_days_max < epi.incubation_days_min:
        raise ConfigConstraintError("epidemic.incubation_days: invalid range")
    for name in ("asymptomatic_fraction", "p_visit_doctor", "p_late_doctor",
                 "p_waning"):
        _check_unit(getattr(epi, name), f"epidemic.{name}")
    for comp in ("i1", "i2", "o1", "o2"):
        pr = getattr(epi.p_recover, comp)
        pd = getattr(epi.p_die, comp)
        _check_unit(pr, f"epidemic.p_recover.{comp}")
        _check_unit(pd, f"epidemic.p_die.{comp}")
        if pr + pd > 1.0:
            raise ConfigConstraintError(
                f"epidemic.p_recover.{comp} + p_die.{comp} exceeds 1"
            )
    _check_unit(epi.testing.sensitivity, "epidemic.testing.sensitivity")
    if epi.testing.capacity_per_day < 0:
        raise ConfigConstraintError("epidemic.testing.capacity_per_day: must be >= 0")

    eco = cfg.economy
    _check_unit(eco.tax_rate, "economy.tax_rate")
    for name in ("wage_per_day", "subsidy_per_unemployed", "public_service_cost",
                 "nonessential_spend", "leisure_spend", "fixed_cost_per_day"):
        if getattr(eco, name) < 0:
            raise ConfigConstraintError(f"economy.{name}: must be >= 0")
    if eco.price_essential_per_day < 1:
        raise ConfigConstraintError("economy.price_essential_per_day: must be >= 1")

    for i, pol in enumerate(cfg.policies):
        if pol.kind not in POLICY_KINDS:
            raise ConfigConstraintError(
                f"policies[{i}].kind: unknown policy kind {pol.kind!r}"
            )
        parse_trigger(pol.trigger, f"policies[{i}].trigger")
        if pol.release:
            parse_trigger(pol.release, f"policies[{i}].release")


_TRIGGER_METRICS = ("detected", "infected_fraction", "tick")


def parse_trigger(text: str, path: str = "trigger") -> tuple[str, str, float]:
    """Parse a trigger expression: ``<metric> <op> <value>``.

    Metrics: detected, infected_fraction, tick.  Ops: >= and <=.
    """
    parts = text.split()
    if len(parts) != 3 or parts[1] not in (">=", "<="):
        raise ConfigConstraintError(
            f"{path}: expected '<metric> >= <value>', got {text!r}"
        )
    metric, op, raw = parts
    if metric not in _TRIGGER_METRICS:
        raise ConfigConstraintError(f"{path}: unknown metric {metric!r}")
    try:
        value = float(raw)
    except ValueError:
        raise ConfigConstraintError(f"{path}: bad value {raw!r}") from None
    return metric, op, value


# ---------------------------------------------------------------------------
# Serialization

def _to_plain(value: Any) -> Any:
    if is_dataclass(value) and not isinstance(value, type):
        return {f.name: _to_plain(getattr(value, f.name)) for f in fields(value)}
    if isinstance(value, dict):
        return {k: _to_plain(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_to_plain(v) for v in value]
    return value


def config_to_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    return _to_plain(cfg)


def _toml_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        out = repr(value)
        return out if ("." in out or "e" in out or "inf" in out or "nan" in out) \
            else out + ".0"
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, list):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise AssertionError(f"cannot serialize {value!r}")


def dump_toml(data: dict[str, Any]) -> str:
    """Emit a nested mapping as TOML (scalars, lists, tables, table arrays)."""
    lines: list[str] = []

    def emit(table: dict[str, Any], prefix: str) -> None:
        scalars = {k: v for k, v in table.items()
                   if not isinstance(v, dict)
                   and not (isinstance(v, list) and v
                            and isinstance(v[0], dict))}
        subtables = {k: v for k, v in table.items() if isinstance(v, dict)}
        arrays = {k: v for k, v in table.items()
                  if isinstance(v, list) and v and isinstance(v[0], dict)}
        if prefix and (scalars or not (subtables or arrays)):
            lines.append(f"[{prefix}]")
        for k, v in scalars.items():
            lines.append(f"{k} = {_toml_value(v)}")
        if scalars and (subtables or arrays):
            lines.append("")
        for k, v in subtables.items():
            sub = f"{prefix}.{k}" if prefix else k
            emit(v, sub)
        for k, items in arrays.items():
            sub = f"{prefix}.{k}" if prefix else k
            for item in items:
                lines.append(f"[[{sub}]]")
                for ik, iv in item.items():
                    lines.append(f"{ik} = {_toml_value(iv)}")
                lines.append("")
        if prefix and scalars:
            lines.append("")

    emit(data, "")
    while lines and lines[-1] == "":
        lines.pop()
    return "\n".join(lines) + "\n"


def serialize_config(cfg: ScenarioConfig) -> str:
    """Serialize to TOML; reparsing yields an equal ScenarioConfig."""
    data = config_to_dict(cfg)
    # 'policies' is an array of tables; 'gains' may be empty (drop it: the
    # empty table round-trips to defaults anyway).
    if not data["needs"]["gains"]:
        del data["needs"]["gains"]
    return dump_toml(data)


def resolved_gains(cfg: ScenarioConfig) -> dict[str, dict[str, float]]:
    """Default gain table with config overrides merged in."""
    out = {act: dict(DEFAULT_GAINS.get(act, {})) for act in ACTIVITY_KINDS}
    for act, row in cfg.needs.gains.items():
        out[act].update(row)
    return out
