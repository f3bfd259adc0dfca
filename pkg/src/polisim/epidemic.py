"""Disease state machine and per-place transmission.

Compartments: S -> E -> I1 -> {I2, O1}, I2 -> O2, any infected -> R or Dead,
optionally R -> S when immunity wanes.  O-compartments are doctor visits:
the agent is routed to a hospital for one tick and is detected there.

Transmission in a place: with I infectious occupants, each susceptible
occupant is exposed with probability 1 - (1 - beta)^I, where
beta = delta x contagion_base x density_mod.
"""

from __future__ import annotations

from .config import EpidemicSection, ScenarioConfig

# Compartment codes
S, E, I1, I2, O1, O2, R, DEAD = range(8)

COMPARTMENT_NAMES = ("S", "E", "I1", "I2", "O1", "O2", "R", "Dead")

INFECTIOUS = frozenset((I1, I2, O1, O2))


class HealthState:
    __slots__ = ("compartment", "ticks_in_compartment", "believes_sick",
                 "tested_positive", "detected", "incubation_ticks",
                 "pending_doctor")

    def __init__(self):
        self.compartment = S
        self.ticks_in_compartment = 0
        self.believes_sick = False
        self.tested_positive = False
        self.detected = False
        self.incubation_ticks = 0
        self.pending_doctor = False


def per_tick_rate(p_day: float, ticks_per_day: int) -> float:
    """Convert a per-day probability to per-tick, preserving the daily marginal."""
    if p_day <= 0.0:
        return 0.0
    if p_day >= 1.0:
        return 1.0
    return 1.0 - (1.0 - p_day) ** (1.0 / ticks_per_day)


class EpidemicParams:
    """Per-tick transition rates precomputed from the per-day config."""

    __slots__ = ("delta", "density_exponent", "incubation_ticks_min",
                 "incubation_ticks_max", "asymptomatic_fraction",
                 "pt_visit_doctor", "pt_late_doctor", "pt_waning",
                 "child_susceptibility", "symptomatic_home_ticks",
                 "pt_recover", "pt_die", "testing_capacity",
                 "testing_symptomatic_only", "testing_sensitivity",
                 "initial_infected")

    def __init__(self, section: EpidemicSection, ticks_per_day: int):
        self.delta = section.transmissibility
        self.density_exponent = section.density_exponent
        self.incubation_ticks_min = section.incubation_days_min * ticks_per_day
        self.incubation_ticks_max = section.incubation_days_max * ticks_per_day
        self.asymptomatic_fraction = section.asymptomatic_fraction
        self.pt_visit_doctor = per_tick_rate(section.p_visit_doctor, ticks_per_day)
        self.pt_late_doctor = per_tick_rate(section.p_late_doctor, ticks_per_day)
        self.pt_waning = per_tick_rate(section.p_waning, ticks_per_day)
        self.child_susceptibility = section.child_susceptibility
        self.symptomatic_home_ticks = section.symptomatic_home_days * ticks_per_day
        self.pt_recover = tuple(
            per_tick_rate(getattr(section.p_recover, c), ticks_per_day)
            for c in ("i1", "i2", "o1", "o2")
        )
        self.pt_die = tuple(
            per_tick_rate(getattr(section.p_die, c), ticks_per_day)
            for c in ("i1", "i2", "o1", "o2")
        )
        self.testing_capacity = section.testing.capacity_per_day
        self.testing_symptomatic_only = section.testing.symptomatic_only
        self.testing_sensitivity = section.testing.sensitivity
        self.initial_infected = section.initial_infected

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "EpidemicParams":
        return cls(cfg.epidemic, cfg.run.ticks_per_day)


def sample_incubation(params: EpidemicParams, rng) -> int:
    lo, hi = params.incubation_ticks_min, params.incubation_ticks_max
    return lo if lo >= hi else rng.randint(lo, hi)


def seed_infection(world, n: int) -> None:
    """Expose n uniformly chosen susceptible agents (epidemic RNG stream)."""
    susceptible = [a for a in world.agents if a.health.compartment == S]
    if n > len(susceptible):
        raise ValueError(
            f"cannot seed {n} infections with {len(susceptible)} susceptible"
        )
    if n == 0:
        return
    rng = world.rng_epidemic
    chosen = rng.sample(susceptible, n)
    for agent in sorted(chosen, key=lambda a: a.id):
        h = agent.health
        h.compartment = E
        h.ticks_in_compartment = 0
        h.incubation_ticks = sample_incubation(world.epi_params, rng)
        world.ever_exposed += 1


def exposure_probability(beta: float, infectious: int) -> float:
    """Per-occupant exposure probability from independent infector contacts."""
    if infectious <= 0 or beta <= 0.0:
        return 0.0
    if beta >= 1.0:
        return 1.0
    return 1.0 - (1.0 - beta) ** infectious


def place_beta(place, params: EpidemicParams, occupant_count: int,
               distancing_multiplier: float = 1.0) -> float:
    density = occupant_count / place.capacity
    if density > 1.0:
        density = 1.0
    if params.density_exponent != 1.0:
        density **= params.density_exponent
    return params.delta * place.contagion_base * density * distancing_multiplier


def place_transmission(place, occupants, params: EpidemicParams, rng,
                       distancing_multiplier: float = 1.0,
                       hospital: bool = False) -> list:
    """Return the occupants newly exposed in this place this tick.

    O-compartment agents transmit only inside hospital places.  Exposure is
    sampled per susceptible occupant; the caller applies the E transition.
    """
    infectious = 0
    for agent in occupants:
        c = agent.health.compartment
        if c == I1 or c == I2 or (hospital and (c == O1 or c == O2)):
            infectious += 1
    if infectious == 0:
        return []
    beta = place_beta(place, params, len(occupants), distancing_multiplier)
    p = exposure_probability(beta, infectious)
    if p <= 0.0:
        return []
    exposed = []
    child_mult = params.child_susceptibility
    for agent in occupants:
        if agent.health.compartment != S:
            continue
        pa = p * child_mult if agent.age_group == 0 else p
        if rng.random() < pa:
            exposed.append(agent)
    return exposed


def expose(world, agent) -> None:
    h = agent.health
    h.compartment = E
    h.ticks_in_compartment = 0
    h.incubation_ticks = sample_incubation(world.epi_params, world.rng_epidemic)
    world.ever_exposed += 1


def progress_disease(health: HealthState, params: EpidemicParams, rng) -> None:
    """Advance one agent's disease state by one tick."""
    c = health.compartment
    if c == S or c == DEAD:
        return
    health.ticks_in_compartment += 1
    if c == E:
        if health.ticks_in_compartment >= health.incubation_ticks:
            health.compartment = I1
            health.ticks_in_compartment = 0
            health.believes_sick = rng.random() >= params.asymptomatic_fraction
        return
    if c == R:
        if params.pt_waning > 0.0 and rng.random() < params.pt_waning:
            health.compartment = S
            health.ticks_in_compartment = 0
            health.believes_sick = False
            health.tested_positive = False
            health.detected = False
        return
    idx = c - I1  # rate index for I1, I2, O1, O2
    r = rng.random()
    if r < params.pt_die[idx]:
        health.compartment = DEAD
        health.ticks_in_compartment = 0
        health.believes_sick = False
        return
    if r < params.pt_die[idx] + params.pt_recover[idx]:
        health.compartment = R
        health.ticks_in_compartment = 0
        health.believes_sick = False
        return
    if c == I1 and health.believes_sick:
        if rng.random() < params.pt_visit_doctor:
            health.compartment = O1
            health.ticks_in_compartment = 0
            health.pending_doctor = True
            if not health.detected:
                health.detected = True
        elif health.ticks_in_compartment >= params.symptomatic_home_ticks:
            health.compartment = I2
            health.ticks_in_compartment = 0
    elif c == I2:
        if rng.random() < params.pt_late_doctor:
            health.compartment = O2
            health.ticks_in_compartment = 0
            health.pending_doctor = True
            if not health.detected:
                health.detected = True


def run_tests(world, rng) -> list:
    """Apply the testing policy for one day; return newly detected agents."""
    params = world.epi_params
    capacity = params.testing_capacity
    if capacity <= 0:
        return []
    if params.testing_symptomatic_only:
        eligible = [a for a in world.agents
                    if a.health.believes_sick and not a.health.detected]
    else:
        eligible = [a for a in world.agents
                    if a.health.compartment != DEAD and not a.health.detected]
    if not eligible:
        return []
    if len(eligible) > capacity:
        eligible = rng.sample(eligible, capacity)
        eligible.sort(key=lambda a: a.id)
    detected = []
    for agent in eligible:
        h = agent.health
        if h.compartment in INFECTIOUS and rng.random() < params.testing_sensitivity:
            h.tested_positive = True
            h.detected = True
            detected.append(agent)
    return detected


def epi_census(agents) -> list:
    """Exact per-compartment counts; sums to the population size."""
    counts = [0] * 8
    for agent in agents:
        counts[agent.health.compartment] += 1
    return counts
