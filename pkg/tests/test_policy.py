from types import SimpleNamespace

from polisim.config import parse_config
from polisim.needs import (
    ACT_LEISURE,
    ACT_REST,
    ACT_SCHOOL,
    ACT_SHOP_ESS,
    ACT_SHOP_NONESS,
    ACT_STAY,
    ACT_WORK_OFFICE,
    Activity,
)
from polisim.policy import (
    CLOSE_SCHOOLS,
    LOCKDOWN,
    PolicySet,
    assign_caregivers,
    clear_caregivers,
    evaluate_triggers,
    filter_context,
)


def make_policy_set(text):
    return PolicySet(parse_config(text).policies)


def plain_agent(**kw):
    return SimpleNamespace(is_caregiver=False, **kw)


def test_trigger_activates_once_and_sticks():
    ps = make_policy_set(
        '[[policies]]\nkind = "lockdown"\ntrigger = "detected >= 5"\n'
    )
    evaluate_triggers(ps, 4, 0.0, 10)
    assert not ps.is_active(LOCKDOWN)
    evaluate_triggers(ps, 5, 0.0, 11)
    assert ps.is_active(LOCKDOWN)
    assert ps.policies[0].activation_tick == 11
    # sticky: falling back below the trigger does not deactivate
    evaluate_triggers(ps, 0, 0.0, 12)
    assert ps.is_active(LOCKDOWN)
    assert ps.activation_log == [(11, "lockdown", "on")]


def test_release_condition_deactivates():
    ps = make_policy_set(
        '[[policies]]\nkind = "lockdown"\ntrigger = "detected >= 5"\n'
        'release = "infected_fraction <= 0.01"\n'
    )
    evaluate_triggers(ps, 5, 0.5, 3)
    evaluate_triggers(ps, 9, 0.005, 7)
    assert not ps.is_active(LOCKDOWN)
    assert ps.activation_log == [(3, "lockdown", "on"), (7, "lockdown", "off")]


def test_tick_trigger():
    ps = make_policy_set(
        '[[policies]]\nkind = "close_schools"\ntrigger = "tick >= 2"\n'
    )
    evaluate_triggers(ps, 0, 0.0, 1)
    assert not ps.is_active(CLOSE_SCHOOLS)
    evaluate_triggers(ps, 0, 0.0, 2)
    assert ps.is_active(CLOSE_SCHOOLS)


def test_distancing_multiplier_compounds():
    ps = make_policy_set(
        '[[policies]]\nkind = "social_distancing"\ntrigger = "tick >= 0"\n'
        'distancing_multiplier = 0.5\n'
        '[[policies]]\nkind = "social_distancing"\ntrigger = "tick >= 0"\n'
        'distancing_multiplier = 0.4\n'
    )
    assert ps.distancing_multiplier() == 1.0  # inactive
    evaluate_triggers(ps, 0, 0.0, 0)
    assert ps.distancing_multiplier() == 0.2


WORK_CTX = [Activity(ACT_WORK_OFFICE, 3), Activity(ACT_STAY, 0)]
FREE_CTX = [Activity(ACT_SHOP_ESS, 4), Activity(ACT_SHOP_NONESS, 5),
            Activity(ACT_LEISURE, 6), Activity(ACT_STAY, 0)]


def test_filter_noop_without_active_policies():
    ps = make_policy_set(
        '[[policies]]\nkind = "lockdown"\ntrigger = "detected >= 5"\n'
    )
    allowed, removed = filter_context(FREE_CTX, ps, plain_agent(), False)
    assert allowed == FREE_CTX and removed == []


def activated(text):
    ps = make_policy_set(text)
    evaluate_triggers(ps, 0, 0.0, 0)
    return ps


def kinds(acts):
    return [a.kind for a in acts]


def test_lockdown_filters_free_time():
    ps = activated('[[policies]]\nkind = "lockdown"\ntrigger = "tick >= 0"\n')
    allowed, removed = filter_context(FREE_CTX, ps, plain_agent(), False)
    assert kinds(allowed) == [ACT_SHOP_ESS, ACT_STAY]
    assert kinds(removed) == [ACT_SHOP_NONESS, ACT_LEISURE]


def test_lockdown_spares_essential_workers():
    ps = activated('[[policies]]\nkind = "lockdown"\ntrigger = "tick >= 0"\n')
    allowed, _ = filter_context(WORK_CTX, ps, plain_agent(), True)
    assert kinds(allowed) == [ACT_WORK_OFFICE, ACT_STAY]
    allowed, removed = filter_context(WORK_CTX, ps, plain_agent(), False)
    assert kinds(allowed) == [ACT_STAY]
    assert kinds(removed) == [ACT_WORK_OFFICE]


def test_school_closure_removes_school_only():
    ps = activated(
        '[[policies]]\nkind = "close_schools"\ntrigger = "tick >= 0"\n'
    )
    ctx = [Activity(ACT_SCHOOL, 7), Activity(ACT_STAY, 0)]
    allowed, removed = filter_context(ctx, ps, plain_agent(), False)
    assert kinds(allowed) == [ACT_STAY]
    assert kinds(removed) == [ACT_SCHOOL]
    # adults' offices stay open
    allowed, removed = filter_context(WORK_CTX, ps, plain_agent(), False)
    assert removed == []


def test_caregiver_kept_from_the_office_during_school_closure():
    ps = activated(
        '[[policies]]\nkind = "close_schools"\ntrigger = "tick >= 0"\n'
    )
    caregiver = plain_agent()
    caregiver.is_caregiver = True
    allowed, removed = filter_context(WORK_CTX, ps, caregiver, False)
    assert kinds(allowed) == [ACT_STAY]
    assert kinds(removed) == [ACT_WORK_OFFICE]


def test_rest_and_stay_are_never_removed():
    ps = activated('[[policies]]\nkind = "lockdown"\ntrigger = "tick >= 0"\n')
    ctx = [Activity(ACT_REST, 0), Activity(ACT_STAY, 0)]
    allowed, removed = filter_context(ctx, ps, plain_agent(), False)
    assert allowed == ctx and removed == []


# --- caregiver assignment on stub worlds -----------------------------------

def stub_agent(aid, age_group, telework=False, dead=False):
    return SimpleNamespace(
        id=aid, age_group=age_group, telework=telework, is_caregiver=False,
        health=SimpleNamespace(compartment=7 if dead else 0))


def stub_world(*households):
    agents = []
    hhs = []
    for members in households:
        hhs.append(SimpleNamespace(members=[a.id for a in members]))
        agents.extend(members)
    agents.sort(key=lambda a: a.id)
    return SimpleNamespace(agents=agents, households=hhs)


def test_caregiver_prefers_telework_then_lowest_id():
    child = stub_agent(0, 0)
    office_adult = stub_agent(1, 2)
    telework_adult = stub_agent(2, 2, telework=True)
    world = stub_world([child, office_adult, telework_adult])
    assign_caregivers(world)
    assert telework_adult.is_caregiver
    assert not office_adult.is_caregiver

    world = stub_world([stub_agent(0, 0), stub_agent(1, 2), stub_agent(2, 2)])
    assign_caregivers(world)
    assert world.agents[1].is_caregiver  # no teleworker: lowest adult id


def test_caregiver_skips_childless_households():
    adults = [stub_agent(0, 2), stub_agent(1, 2)]
    world = stub_world(adults)
    assign_caregivers(world)
    assert not any(a.is_caregiver for a in adults)


def test_caregiver_replaced_after_death():
    child = stub_agent(0, 0)
    first = stub_agent(1, 2)
    second = stub_agent(2, 2)
    world = stub_world([child, first, second])
    assign_caregivers(world)
    assert first.is_caregiver
    first.health.compartment = 7  # dies while the closure is active
    assign_caregivers(world)
    assert not first.is_caregiver  # stale flag cleared
    assert second.is_caregiver


def test_dead_child_releases_the_household():
    child = stub_agent(0, 0, dead=True)
    adult = stub_agent(1, 2)
    world = stub_world([child, adult])
    assign_caregivers(world)
    assert not adult.is_caregiver


def test_clear_caregivers():
    child = stub_agent(0, 0)
    adult = stub_agent(1, 2)
    world = stub_world([child, adult])
    assign_caregivers(world)
    clear_caregivers(world)
    assert not any(a.is_caregiver for a in world.agents)
