"""Interventions: trigger evaluation, context filtering, caregiver rule.

Policies are sticky: once the trigger condition holds they stay active
unless a release condition is configured.  Triggers fire on *detected*
infections (doctor visits and tests), not true infections.
"""

from __future__ import annotations

from .config import PolicyConfig, parse_trigger
from .needs import (
    ACT_LEISURE,
    ACT_REST,
    ACT_SCHOOL,
    ACT_SHOP_ESS,
    ACT_SHOP_NONESS,
    ACT_STAY,
    ACT_WORK_HOME,
    ACT_WORK_OFFICE,
)

CLOSE_SCHOOLS = "close_schools"
CLOSE_WORKPLACES = "close_workplaces_telework"
CLOSE_NONESSENTIAL = "close_nonessential_shops"
LOCKDOWN = "lockdown"
SOCIAL_DISTANCING = "social_distancing"
TESTING = "testing"
WAGE_TAKEOVER = "wage_takeover"


class Policy:
    __slots__ = ("kind", "trigger", "release", "active", "activation_tick",
                 "distancing_multiplier")

    def __init__(self, spec: PolicyConfig):
        self.kind = spec.kind
        self.trigger = parse_trigger(spec.trigger)
        self.release = parse_trigger(spec.release) if spec.release else None
        self.active = False
        self.activation_tick = None
        self.distancing_multiplier = spec.distancing_multiplier


class PolicySet:
    """Ordered list of policies; evaluation order is list order."""

    __slots__ = ("policies", "activation_log")

    def __init__(self, specs: list[PolicyConfig]):
        self.policies = [Policy(s) for s in specs]
        self.activation_log = []  # (tick, kind, "on"|"off")

    def active_kinds(self) -> set:
        return {p.kind for p in self.policies if p.active}

    def is_active(self, kind: str) -> bool:
        return any(p.kind == kind and p.active for p in self.policies)

    def distancing_multiplier(self) -> float:
        mult = 1.0
        for p in self.policies:
            if p.active and p.kind == SOCIAL_DISTANCING:
                mult *= p.distancing_multiplier
        return mult


def _condition_holds(cond, detected: int, infected_fraction: float,
                     tick: int) -> bool:
    metric, op, value = cond
    current = {"detected": detected, "infected_fraction": infected_fraction,
               "tick": tick}[metric]
    return current >= value if op == ">=" else current <= value


def evaluate_triggers(policy_set: PolicySet, detected: int,
                      infected_fraction: float, tick: int) -> None:
    """Activate inactive policies whose trigger holds; apply releases."""
    for p in policy_set.policies:
        if not p.active:
            if _condition_holds(p.trigger, detected, infected_fraction, tick):
                p.active = True
                p.activation_tick = tick
                policy_set.activation_log.append((tick, p.kind, "on"))
        elif p.release is not None:
            if _condition_holds(p.release, detected, infected_fraction, tick):
                p.active = False
                policy_set.activation_log.append((tick, p.kind, "off"))


def filter_context(context: list, policy_set: PolicySet, agent,
                   essential_worker: bool) -> tuple[list, list]:
    """Split a context into allowed and policy-removed activities.

    rest_at_home and stay_home are never removed.  The removed set is
    retained so that rule-breaking remains representable downstream.
    """
    active = policy_set.active_kinds()
    if not active:
        return context, []
    lockdown = LOCKDOWN in active
    close_schools = CLOSE_SCHOOLS in active
    close_work = CLOSE_WORKPLACES in active
    close_noness = CLOSE_NONESSENTIAL in active
    caregiver = agent.is_caregiver and close_schools
    allowed = []
    removed = []
    for act in context:
        kind = act.kind
        drop = False
        if kind == ACT_SCHOOL and (close_schools or lockdown):
            drop = True
        elif kind == ACT_WORK_OFFICE:
            if caregiver or close_work or (lockdown and not essential_worker):
                drop = True
        elif kind == ACT_SHOP_NONESS and (close_noness or lockdown):
            drop = True
        elif kind == ACT_LEISURE and lockdown:
            drop = True
        (removed if drop else allowed).append(act)
    return allowed, removed


def assign_caregivers(world) -> None:
    """While schools are closed, bind one adult per child-bearing household
    to home-based work: the lowest-id telework-capable adult, else the
    lowest-id adult."""
    for household in world.households:
        child_alive = False
        for aid in household.members:
            agent = world.agents[aid]
            if agent.is_caregiver and agent.health.compartment == 7:
                agent.is_caregiver = False  # died; successor chosen below
            if agent.age_group == 0 and agent.health.compartment != 7:
                child_alive = True
        if not child_alive:
            continue
        adults = [world.agents[aid] for aid in household.members
                  if world.agents[aid].age_group in (2, 3)
                  and world.agents[aid].health.compartment != 7]
        if not adults:
            continue  # excluded by household construction; tolerate deaths
        if any(a.is_caregiver for a in adults):
            continue
        capable = [a for a in adults if a.telework]
        chosen = min(capable or adults, key=lambda a: a.id)
        chosen.is_caregiver = True


def clear_caregivers(world) -> None:
    for agent in world.agents:
        agent.is_caregiver = False
