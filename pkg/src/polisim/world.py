"""World state and per-tick orchestration.

Owns the synthetic population, the tick clock, and the fixed per-tick
sequence: clock, policy triggers, per-agent deliberation and movement,
per-place transmission, disease progression, end-of-day settlement,
metrics.  Agent iteration is in ascending id order; the RNG is split into
named streams (population, epidemic, behavior) so adding draws to one
concern does not perturb the others.
"""

from __future__ import annotations

import random

from . import economy, epidemic, policy as policy_mod
from .config import (
    AGE_GROUPS,
    HOUSEHOLD_KINDS,
    PLACE_KINDS,
    ScenarioConfig,
    ConfigConstraintError,
)
from .epidemic import DEAD, E, EpidemicParams, HealthState, I1, I2, O1, O2, S
from .needs import (
    ACT_DOCTOR,
    ACT_LEISURE,
    ACT_REST,
    ACT_SCHOOL,
    ACT_SHOP_ESS,
    ACT_SHOP_NONESS,
    ACT_STAY,
    ACT_WORK_HOME,
    ACT_WORK_OFFICE,
    Activity,
    N_ACTIVITIES,
    NeedsCalibration,
    NeedsState,
    apply_effects,
    choose_activity,
    decay,
    expected_gains,
    refresh_derived,
)

# Age-group codes (indices into config.AGE_GROUPS)
CHILD, STUDENT, WORKER, RETIREE = range(4)

# Place-kind codes (indices into config.PLACE_KINDS)
(
    PK_HOME,
    PK_ESSENTIAL,
    PK_NONESSENTIAL,
    PK_WORKPLACE,
    PK_SCHOOL,
    PK_HOSPITAL,
    PK_LEISURE,
    PK_STATION,
) = range(8)

SEGMENT_NAMES = ("morning", "afternoon", "evening", "night")


class Clock:
    """Tick clock; with 4 ticks per day the segments cycle
    morning/afternoon/evening/night, and days 5 and 6 of each week are
    the weekend."""

    __slots__ = ("tick", "ticks_per_day", "started")

    def __init__(self, ticks_per_day: int = 4):
        self.tick = 0
        self.ticks_per_day = ticks_per_day
        self.started = False

    @property
    def day_index(self) -> int:
        return self.tick // self.ticks_per_day

    @property
    def segment(self) -> int:
        return self.tick % self.ticks_per_day

    @property
    def is_weekend(self) -> bool:
        return self.day_index % 7 in (5, 6)

    def advance(self) -> None:
        if not self.started:
            self.started = True
        else:
            self.tick += 1


class Traits:
    __slots__ = ("risk_avoidance_weight", "compliance_propensity", "importance")

    def __init__(self, risk_avoidance_weight: float,
                 compliance_propensity: float, importance: tuple):
        self.risk_avoidance_weight = risk_avoidance_weight
        self.compliance_propensity = compliance_propensity
        self.importance = importance


class Agent:
    __slots__ = (
        "id", "age_group", "home", "alt_home", "work_or_school", "employer",
        "traits", "needs", "health", "wealth", "household_index", "household",
        "is_caregiver", "telework", "commuter", "current_place",
        "cluster_index", "fav_essential", "fav_nonessential", "worked_today",
        "current_activity", "prev_kind",
        # reusable candidate activities
        "act_rest", "act_stay", "act_work_home", "act_work_office",
        "act_school", "act_shop_ess", "act_shop_noness", "act_leisure",
        "act_doctor",
    )

    def __init__(self, agent_id: int, age_group: int, home: int):
        self.id = agent_id
        self.age_group = age_group
        self.home = home
        self.alt_home = None
        self.work_or_school = None
        self.employer = None
        self.traits = None
        self.needs = None
        self.health = HealthState()
        self.wealth = 0
        self.household_index = 0
        self.household = None
        self.is_caregiver = False
        self.telework = False
        self.commuter = False
        self.current_place = home
        self.cluster_index = 0
        self.fav_essential = None
        self.fav_nonessential = None
        self.worked_today = False
        self.current_activity = None
        self.prev_kind = ACT_REST
        self.act_rest = None
        self.act_stay = None
        self.act_work_home = None
        self.act_work_office = None
        self.act_school = None
        self.act_shop_ess = None
        self.act_shop_noness = None
        self.act_leisure = None
        self.act_doctor = None

    @property
    def essential_stock(self) -> float:
        # View of the household stock; supplies are pooled at home.
        return self.household.stock_days


class Place:
    __slots__ = ("id", "kind", "contagion_base", "capacity", "occupants",
                 "wealth", "employees", "insolvent")

    def __init__(self, place_id: int, kind: int, contagion_base: float,
                 capacity: int, wealth: int = 0):
        self.id = place_id
        self.kind = kind
        self.contagion_base = contagion_base
        self.capacity = capacity
        self.occupants = []
        self.wealth = wealth
        self.employees = []
        self.insolvent = False


class Household:
    __slots__ = ("kind", "home", "home2", "members", "stock_days")

    def __init__(self, kind: int, home: int, members=None, home2=None):
        self.kind = kind
        self.home = home
        self.home2 = home2
        self.members = members if members is not None else []
        self.stock_days = 0.0


class World:
    __slots__ = (
        "config", "clock", "agents", "places", "households", "government",
        "ledger", "clusters", "policy_set", "cal", "epi_params",
        "economy_params", "rng_population", "rng_epidemic", "rng_behavior",
        "detected_total", "ever_exposed", "violations", "wage_shortfalls",
        "public_places", "shops", "cluster_counts_prev", "prevalence",
        "initial_population", "seed", "station", "hospital",
        "closed_kinds_cache", "transmission_log",
    )

    def __init__(self, config: ScenarioConfig, seed: int):
        self.config = config
        self.seed = seed
        self.clock = Clock(config.run.ticks_per_day)
        self.agents = []
        self.places = []
        self.households = []
        self.government = economy.Government(config.economy)
        self.ledger = economy.Ledger()
        self.clusters = []
        self.policy_set = policy_mod.PolicySet(config.policies)
        self.cal = NeedsCalibration.from_config(config)
        self.epi_params = EpidemicParams.from_config(config)
        self.economy_params = config.economy
        self.rng_population = random.Random(f"{seed}:population")
        self.rng_epidemic = random.Random(f"{seed}:epidemic")
        self.rng_behavior = random.Random(f"{seed}:behavior")
        self.detected_total = 0
        self.ever_exposed = 0
        self.violations = []
        self.wage_shortfalls = 0
        self.public_places = []
        self.shops = []
        self.cluster_counts_prev = []
        self.prevalence = 0.0
        self.initial_population = 0
        self.station = None
        self.hospital = None
        self.closed_kinds_cache = frozenset()
        self.transmission_log = None  # list of TransmissionEvent tuples, opt-in

    def is_place_closed(self, place: Place) -> bool:
        """Business closure for wage takeover: non-essential shops under a
        closure order; other employers stay open (telework)."""
        return place.kind == PK_NONESSENTIAL and bool(
            self.closed_kinds_cache & {policy_mod.CLOSE_NONESSENTIAL,
                                       policy_mod.LOCKDOWN})

    def wealth_snapshot(self) -> dict:
        balances = {economy.agent_key(a.id): a.wealth for a in self.agents}
        for p in self.places:
            balances[economy.place_key(p.id)] = p.wealth
        balances[economy.GOVERNMENT] = self.government.reserves
        return balances


# ---------------------------------------------------------------------------
# Population generation

_MIN_HOUSEHOLD_SIZE = {
    "family": 3,
    "student_shared": 3,
    "retirement_home": 8,
    "three_generation": 4,
    "co_parenting": 3,
}


def _new_place(world: World, kind: int, wealth: int = 0) -> Place:
    cfg = world.config.places
    name = PLACE_KINDS[kind]
    place = Place(len(world.places), kind,
                  getattr(cfg.contagion_base, name),
                  getattr(cfg.capacity, name), wealth)
    world.places.append(place)
    return place


def _new_agent(world: World, age_group: int, home: int) -> Agent:
    agent = Agent(len(world.agents), age_group, home)
    world.agents.append(agent)
    return agent


def _spawn_household(world: World, kind_name: str, budget: int) -> int:
    """Create one household of the archetype; returns members added.

    Child/retiree counts clamp to the remaining population budget when it is
    small, so the final population lands near the target.
    """
    rng = world.rng_population
    kind = HOUSEHOLD_KINDS.index(kind_name)
    home = _new_place(world, PK_HOME)
    hh = Household(kind, home.id)
    hh_index = len(world.households)
    world.households.append(hh)
    members: list[Agent] = []

    def clamp_draw(lo: int, hi: int, used: int) -> int:
        n = rng.randint(lo, hi)
        room = budget - used
        if room < lo:
            return lo
        return min(n, max(lo, room))

    if kind_name == "family":
        members.append(_new_agent(world, WORKER, home.id))
        members.append(_new_agent(world, WORKER, home.id))
        for _ in range(clamp_draw(1, 3, 2)):
            members.append(_new_agent(world, CHILD, home.id))
    elif kind_name == "student_shared":
        for _ in range(rng.randint(3, 4)):
            members.append(_new_agent(world, STUDENT, home.id))
    elif kind_name == "retirement_home":
        for _ in range(8):
            members.append(_new_agent(world, RETIREE, home.id))
    elif kind_name == "three_generation":
        members.append(_new_agent(world, WORKER, home.id))
        members.append(_new_agent(world, WORKER, home.id))
        for _ in range(clamp_draw(1, 2, 2)):
            members.append(_new_agent(world, CHILD, home.id))
        for _ in range(rng.randint(1, 2)):
            members.append(_new_agent(world, RETIREE, home.id))
    elif kind_name == "co_parenting":
        home2 = _new_place(world, PK_HOME)
        hh.home2 = home2.id
        members.append(_new_agent(world, WORKER, home.id))
        members.append(_new_agent(world, WORKER, home2.id))
        for _ in range(clamp_draw(1, 2, 2)):
            child = _new_agent(world, CHILD, home.id)
            child.alt_home = home2.id
            members.append(child)
    else:  # pragma: no cover
        raise AssertionError(kind_name)

    for agent in members:
        agent.household_index = hh_index
        hh.members.append(agent.id)
    return len(members)


def generate_population(config: ScenarioConfig, seed: int) -> World:
    """Build a world from the configured household distribution; no agent
    is infected on return."""
    world = World(config, seed)
    rng = world.rng_population
    pop_cfg = config.population
    dist = pop_cfg.household_distribution
    target = pop_cfg.target

    active_kinds = [k for k in HOUSEHOLD_KINDS if getattr(dist, k) > 0]
    min_total = sum(_MIN_HOUSEHOLD_SIZE[k] for k in active_kinds)
    if target < min_total:
        for k in active_kinds:
            if _MIN_HOUSEHOLD_SIZE[k] > target:
                break
        raise ConfigConstraintError(
            f"population.target {target} too small to honor household kind "
            f"{k!r} (all active kinds need {min_total} agents)"
        )

    pop = 0
    # One household of each configured archetype first, then fill by draw.
    for k in active_kinds:
        pop += _spawn_household(world, k, target - pop)
        if pop >= target:
            break
    weights = [getattr(dist, k) for k in active_kinds]
    while pop < target:
        k = rng.choices(active_kinds, weights)[0]
        pop += _spawn_household(world, k, target - pop)
    world.initial_population = len(world.agents)

    _build_places(world)
    _assign_roles(world)
    _init_agent_state(world)
    return world


def _build_places(world: World) -> None:
    cfg = world.config.places
    n = len(world.agents)
    for _ in range(max(1, round(n / cfg.agents_per_essential_shop))):
        _new_place(world, PK_ESSENTIAL,
                   world.config.economy.initial_place_wealth.essential_shop)
    for _ in range(max(1, round(n / cfg.agents_per_nonessential_shop))):
        _new_place(world, PK_NONESSENTIAL,
                   world.config.economy.initial_place_wealth.nonessential_shop)
    for _ in range(max(1, round(n / cfg.agents_per_leisure))):
        _new_place(world, PK_LEISURE,
                   world.config.economy.initial_place_wealth.leisure)
    n_children = sum(1 for a in world.agents if a.age_group in (CHILD, STUDENT))
    n_schools = max(1, -(-n_children // cfg.children_per_school))
    for _ in range(n_schools):
        _new_place(world, PK_SCHOOL,
                   world.config.economy.initial_place_wealth.school)
    world.hospital = _new_place(world, PK_HOSPITAL,
                                world.config.economy.initial_place_wealth.hospital)
    world.station = _new_place(world, PK_STATION)
    world.public_places = [p for p in world.places
                           if p.kind in (PK_SCHOOL, PK_HOSPITAL)]
    world.shops = [p for p in world.places
                   if p.kind in (PK_ESSENTIAL, PK_NONESSENTIAL)]


def _assign_roles(world: World) -> None:
    cfg = world.config
    rng = world.rng_population
    places = world.places
    essential = [p for p in places if p.kind == PK_ESSENTIAL]
    nonessential = [p for p in places if p.kind == PK_NONESSENTIAL]
    schools = [p for p in places if p.kind == PK_SCHOOL]

    workers = [a for a in world.agents if a.age_group == WORKER]
    shuffled = list(workers)
    rng.shuffle(shuffled)
    slots: list[Place] = []
    for shop in essential + nonessential:
        slots.extend([shop] * cfg.places.shop_staff)
    n_rest = max(0, len(shuffled) - len(slots))
    n_workplaces = max(1, -(-n_rest // cfg.places.workers_per_workplace)) \
        if n_rest else 0
    workplaces = [
        _new_place(world, PK_WORKPLACE,
                   cfg.economy.initial_place_wealth.workplace)
        for _ in range(n_workplaces)
    ]
    wp_iter = 0
    for i, agent in enumerate(shuffled):
        if i < len(slots):
            employer = slots[i]
        else:
            employer = workplaces[wp_iter % len(workplaces)]
            wp_iter += 1
        agent.employer = employer.id
        agent.work_or_school = employer.id
        employer.employees.append(agent.id)
        if employer.kind == PK_WORKPLACE:
            agent.telework = rng.random() < cfg.population.telework_fraction
            agent.commuter = rng.random() < cfg.population.commuter_fraction

    pupils = [a for a in world.agents if a.age_group in (CHILD, STUDENT)]
    for i, agent in enumerate(pupils):
        agent.work_or_school = schools[i % len(schools)].id

    # Social clusters: fixed-size chunks of the shuffled population, each
    # meeting at one leisure place.
    leisure = [p for p in places if p.kind == PK_LEISURE]
    everyone = list(world.agents)
    rng.shuffle(everyone)
    size = cfg.population.mean_cluster_size
    for start in range(0, len(everyone), size):
        chunk = everyone[start:start + size]
        idx = len(world.clusters)
        spot = leisure[idx % len(leisure)]
        for agent in chunk:
            agent.cluster_index = idx
            agent.act_leisure = Activity(ACT_LEISURE, spot.id)
        world.clusters.append([a.id for a in chunk])
    world.cluster_counts_prev = [[0] * N_ACTIVITIES for _ in world.clusters]

    for agent in world.agents:
        agent.fav_essential = essential[rng.randrange(len(essential))].id
        agent.fav_nonessential = nonessential[rng.randrange(len(nonessential))].id


def _init_agent_state(world: World) -> None:
    cfg = world.config
    cal = world.cal
    rng = world.rng_population
    base_importance = tuple(
        getattr(cfg.needs.importance, n)
        for n in ("safety", "belonging", "self_esteem", "autonomy", "survival")
    )
    jitter = cfg.needs.importance_jitter

    for hh in world.households:
        hh.stock_days = float(cfg.economy.initial_stock_days)

    for agent in world.agents:
        agent.household = world.households[agent.household_index]
        agent.wealth = getattr(cfg.economy.initial_wealth,
                               AGE_GROUPS[agent.age_group])
        raw = [w * (1.0 + jitter * rng.uniform(-1.0, 1.0))
               for w in base_importance]
        total = sum(raw)
        importance = tuple(w / total for w in raw)
        agent.traits = Traits(rng.random(), rng.random(), importance)
        levels = [rng.uniform(0.5, 1.0) for _ in range(5)]
        needs = NeedsState(levels,
                           risk_avoidance=rng.uniform(0.5, 1.0),
                           compliance=rng.uniform(0.5, 1.0))
        refresh_derived(needs, cal,
                        world.households[agent.household_index].stock_days,
                        agent.wealth)
        agent.needs = needs
        home = agent.home
        agent.act_rest = Activity(ACT_REST, home)
        agent.act_stay = Activity(ACT_STAY, home)
        if agent.telework:
            agent.act_work_home = Activity(ACT_WORK_HOME, home)
        if agent.employer is not None:
            agent.act_work_office = Activity(ACT_WORK_OFFICE, agent.employer)
        if agent.age_group in (CHILD, STUDENT) and agent.work_or_school is not None:
            agent.act_school = Activity(ACT_SCHOOL, agent.work_or_school)
        agent.act_shop_ess = Activity(ACT_SHOP_ESS, agent.fav_essential)
        agent.act_shop_noness = Activity(ACT_SHOP_NONESS, agent.fav_nonessential)
        agent.act_doctor = Activity(ACT_DOCTOR, world.hospital.id)
        agent.current_place = home
        agent.current_activity = agent.act_rest


# ---------------------------------------------------------------------------
# Context

def available_context(agent: Agent, clock: Clock, world: World) -> list:
    """Candidate activities for this tick segment, filtered by physical
    availability only; policy filtering is a separate step so that
    rule-breaking stays representable."""
    segment = clock.segment
    last = clock.ticks_per_day - 1
    health = agent.health
    if segment == last:  # night: rest only
        return [agent.act_rest]
    if health.pending_doctor:
        return [agent.act_doctor]
    c = health.compartment
    if c == O1 or c == O2:
        return [agent.act_rest]
    sick = health.believes_sick
    work_segment = (not clock.is_weekend) and segment < last - 1
    if work_segment:
        group = agent.age_group
        if group == CHILD or group == STUDENT:
            ctx = []
            if agent.act_school is not None:
                ctx.append(agent.act_school)
            ctx.append(agent.act_stay)
            if sick:
                ctx.append(agent.act_rest)
            return ctx
        if group == WORKER and agent.employer is not None:
            ctx = [agent.act_work_office]
            if agent.act_work_home is not None:
                ctx.append(agent.act_work_home)
            ctx.append(agent.act_stay)
            if sick:
                ctx.append(agent.act_rest)
            return ctx
        # Retirees and jobless adults have free time in work segments.
    if agent.age_group == CHILD:
        ctx = [agent.act_leisure, agent.act_stay]
    else:
        ctx = [agent.act_shop_ess, agent.act_shop_noness, agent.act_leisure,
               agent.act_stay]
    if sick:
        ctx.append(agent.act_rest)
    return ctx


# ---------------------------------------------------------------------------
# Stepping

_HOME_BOUND = (ACT_REST, ACT_STAY, ACT_WORK_HOME)


def _activity_place(agent: Agent, kind: int, act: Activity,
                    effective_home: int) -> int:
    if kind in _HOME_BOUND:
        return effective_home
    return act.place


def _effective_home(agent: Agent, week: int) -> int:
    if agent.alt_home is not None and week % 2 == 1:
        return agent.alt_home
    return agent.home


def step_world(world: World):
    """Advance the world one tick; returns the metrics row (see metrics.py)."""
    from .metrics import build_row  # local import to avoid a cycle

    clock = world.clock
    clock.advance()
    tick = clock.tick
    segment = clock.segment
    last_segment = clock.ticks_per_day - 1
    week = clock.day_index // 7
    agents = world.agents
    n_total = world.initial_population

    # Daily testing at the morning segment
    if segment == 0 and world.policy_set.is_active(policy_mod.TESTING):
        newly = epidemic.run_tests(world, world.rng_epidemic)
        world.detected_total += len(newly)

    # Policy triggers (counts from the previous tick)
    infected = sum(1 for a in agents
                   if a.health.compartment in (I1, I2, O1, O2))
    frac = infected / n_total if n_total else 0.0
    policy_mod.evaluate_triggers(world.policy_set, world.detected_total,
                                 frac, tick)
    world.closed_kinds_cache = frozenset(world.policy_set.active_kinds())
    world.government.wage_takeover_active = \
        policy_mod.WAGE_TAKEOVER in world.closed_kinds_cache
    if policy_mod.CLOSE_SCHOOLS in world.closed_kinds_cache:
        policy_mod.assign_caregivers(world)
    elif any(p.kind == policy_mod.CLOSE_SCHOOLS and not p.active
             and p.activation_tick is not None
             for p in world.policy_set.policies):
        policy_mod.clear_caregivers(world)

    world.prevalence = frac
    distancing = world.policy_set.distancing_multiplier()
    policy_set = world.policy_set
    cal = world.cal
    households = world.households
    places = world.places
    for p in places:
        p.occupants.clear()
    station_transit = []

    cluster_counts = [[0] * N_ACTIVITIES for _ in world.clusters]
    prev_counts = world.cluster_counts_prev
    clusters = world.clusters
    act_counts = [0] * N_ACTIVITIES
    violations_this_tick = 0
    prevalence = world.prevalence
    any_policy = bool(world.closed_kinds_cache)
    caregiver_duty = (
        policy_mod.CLOSE_SCHOOLS in world.closed_kinds_cache
        and not clock.is_weekend and segment < last_segment - 1
    )

    for agent in agents:
        health = agent.health
        if health.compartment == DEAD:
            continue
        hh = households[agent.household_index]
        needs = agent.needs
        decay(needs, 1, cal)
        refresh_derived(needs, cal, hh.stock_days, agent.wealth)

        context = available_context(agent, clock, world)
        if any_policy and len(context) > 1:
            essential_worker = (
                agent.employer is not None
                and places[agent.employer].kind == PK_ESSENTIAL
            )
            filtered, removed = policy_mod.filter_context(
                context, policy_set, agent, essential_worker)
        else:
            filtered, removed = context, []

        if len(filtered) == 1 and not removed:
            act = filtered[0]
        else:
            traits = agent.traits
            cluster = clusters[agent.cluster_index]
            act = choose_activity(
                needs, traits.importance, filtered, removed, cal,
                prevalence, traits.risk_avoidance_weight,
                traits.compliance_propensity, health.believes_sick,
                prev_counts[agent.cluster_index], len(cluster),
                agent.worked_today,
            )
        kind = act.kind
        if act.breaks_policy:
            world.violations.append((tick, agent.id, kind))
            violations_this_tick += 1
        elif caregiver_duty and agent.is_caregiver and kind not in _HOME_BOUND:
            # Caregiver duty breach: the designated carer left home during a
            # working segment (e.g. a doctor visit).
            world.violations.append((tick, agent.id, kind))
            violations_this_tick += 1

        home = _effective_home(agent, week)
        dest = _activity_place(agent, kind, act, home)
        agent.current_place = dest
        place = places[dest]
        place.occupants.append(agent)
        agent.current_activity = act
        act_counts[kind] += 1
        cluster_counts[agent.cluster_index][kind] += 1

        if kind == ACT_WORK_OFFICE or kind == ACT_WORK_HOME:
            agent.worked_today = True
            if kind == ACT_WORK_OFFICE and agent.commuter:
                station_transit.append(agent)
        elif kind == ACT_SCHOOL:
            agent.worked_today = True  # school tires too; no wage (no employer)
        elif kind == ACT_SHOP_ESS:
            economy.buy_essentials(world, agent, place)
        elif kind == ACT_SHOP_NONESS:
            economy.transact(world, agent, place,
                             world.economy_params.nonessential_spend,
                             essential=False)
        elif kind == ACT_LEISURE:
            economy.transact(world, agent, place,
                             world.economy_params.leisure_spend,
                             essential=False)
        elif kind == ACT_DOCTOR:
            health.pending_doctor = False

        # Realized need effects
        cluster = clusters[agent.cluster_index]
        conf = (prev_counts[agent.cluster_index][kind] / len(cluster)
                if cluster else 0.0)
        gains = expected_gains(
            cal, kind, act.breaks_policy, kind not in _HOME_BOUND,
            prevalence, agent.traits.risk_avoidance_weight,
            agent.traits.compliance_propensity, health.believes_sick, conf,
        )
        apply_effects(needs, gains, cal, health.believes_sick,
                      kind == ACT_REST)
        agent.prev_kind = kind

    world.cluster_counts_prev = cluster_counts

    # Per-place transmission
    epi = world.epi_params
    rng_epi = world.rng_epidemic
    newly_exposed = []
    for place in places:
        occupants = place.occupants
        if len(occupants) < 2:
            continue
        exposed = epidemic.place_transmission(
            place, occupants, epi, rng_epi, distancing,
            hospital=(place.kind == PK_HOSPITAL))
        if exposed:
            newly_exposed.extend(exposed)
            if world.transmission_log is not None:
                world.transmission_log.append(
                    (place.id, tick, [a.id for a in exposed]))
    if len(station_transit) >= 2:
        exposed = epidemic.place_transmission(
            world.station, station_transit, epi, rng_epi, distancing)
        for a in exposed:
            if a not in newly_exposed:
                newly_exposed.append(a)
        if exposed and world.transmission_log is not None:
            world.transmission_log.append(
                (world.station.id, tick, [a.id for a in exposed]))
    for agent in newly_exposed:
        epidemic.expose(world, agent)

    # Disease progression
    for agent in agents:
        health = agent.health
        c = health.compartment
        if c == S or c == DEAD:
            continue
        was_detected = health.detected
        epidemic.progress_disease(health, epi, rng_epi)
        if health.detected and not was_detected:
            world.detected_total += 1

    # Same-tick trigger evaluation so that activation coincides with the
    # detection that caused it (behavioral effect starts next tick).
    infected = sum(1 for a in agents
                   if a.health.compartment in (I1, I2, O1, O2))
    frac = infected / n_total if n_total else 0.0
    policy_mod.evaluate_triggers(world.policy_set, world.detected_total,
                                 frac, tick)

    # End-of-day settlement
    velocity = None
    if segment == last_segment:
        economy.settle_day(world)
        velocity = economy.money_velocity(
            world.ledger, economy.total_money(world), 1,
            clock.ticks_per_day, tick)

    activations = [f"{kind}:{state}"
                   for (t, kind, state) in world.policy_set.activation_log
                   if t == tick]

    return build_row(world, act_counts, violations_this_tick, velocity,
                     activations, len(station_transit))
