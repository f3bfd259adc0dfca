"""Closed money circuit: wages, taxes, subsidies, purchases, fixed costs.

All amounts are integer minor units, so conservation is exact: every wealth
mutation goes through the append-only ledger, and replaying the ledger from
the initial endowments reconstructs every wealth field.
"""

from __future__ import annotations

from .config import EconomySection, ScenarioConfig

# Ledger entry reasons
WAGE = "wage"
TAX = "tax"
SUBSIDY = "subsidy"
PURCHASE_ESSENTIAL = "purchase_essential"
PURCHASE_NONESSENTIAL = "purchase_nonessential"
FIXED_COST = "fixed_cost"
PUBLIC_SERVICE = "public_service"

PURCHASE_REASONS = frozenset((PURCHASE_ESSENTIAL, PURCHASE_NONESSENTIAL))

GOVERNMENT = "gov"


class Government:
    __slots__ = ("reserves", "tax_permille", "subsidy_per_unemployed",
                 "wage_takeover_active", "public_service_cost", "allow_deficit")

    def __init__(self, eco: EconomySection):
        self.reserves = eco.government_reserves
        self.tax_permille = int(round(eco.tax_rate * 1000))
        self.subsidy_per_unemployed = eco.subsidy_per_unemployed
        self.wage_takeover_active = False
        self.public_service_cost = eco.public_service_cost
        self.allow_deficit = eco.allow_deficit

    def tax_on(self, gross: int) -> int:
        return (gross * self.tax_permille) // 1000


class Ledger:
    """Append-only record of every money transfer.

    Party encoding: ``a<id>`` for agents, ``p<id>`` for places, ``gov``.
    """

    __slots__ = ("entries",)

    def __init__(self):
        self.entries = []

    def post(self, tick: int, payer: str, payee: str, amount: int,
             reason: str) -> None:
        assert amount > 0, "ledger amounts are strictly positive"
        self.entries.append((tick, payer, payee, amount, reason))


def agent_key(agent_id: int) -> str:
    return f"a{agent_id}"


def place_key(place_id: int) -> str:
    return f"p{place_id}"


def _transfer_from_agent(world, agent, payee_place, amount: int,
                         reason: str) -> None:
    agent.wealth -= amount
    payee_place.wealth += amount
    world.ledger.post(world.clock.tick, agent_key(agent.id),
                      place_key(payee_place.id), amount, reason)


def transact(world, agent, shop, amount: int, essential: bool) -> int:
    """Move up to ``amount`` from agent to shop; returns the amount paid.

    Agents do not buy on credit: an unaffordable purchase is scaled down to
    the agent's wealth, and a zero-affordable purchase is a no-op (the
    food-safety consequence follows from the stock not rising).
    """
    if amount <= 0:
        return 0
    if amount > agent.wealth:
        amount = agent.wealth
    if amount <= 0:
        return 0
    reason = PURCHASE_ESSENTIAL if essential else PURCHASE_NONESSENTIAL
    _transfer_from_agent(world, agent, shop, amount, reason)
    return amount


def buy_essentials(world, agent, shop) -> int:
    """Restock the agent's household toward the target; returns amount paid."""
    eco = world.economy_params
    household = world.households[agent.household_index]
    members = len(household.members)
    need_days = eco.restock_target_days - int(household.stock_days)
    if need_days <= 0:
        return 0
    price_per_day = eco.price_essential_per_day * members
    affordable_days = agent.wealth // price_per_day if price_per_day > 0 else 0
    days = need_days if need_days < affordable_days else affordable_days
    if days <= 0:
        return 0
    paid = transact(world, agent, shop, days * price_per_day, essential=True)
    household.stock_days += days
    return paid


def _pay_wage(world, payer_place, payer_key: str, agent, gov: Government,
              tick: int) -> None:
    """Gross wage to the agent, then wage tax back to government."""
    eco = world.economy_params
    gross = eco.wage_per_day
    if payer_place is not None:
        if payer_place.wealth < gross:
            gross = payer_place.wealth  # pays what it has; shortfall logged
            world.wage_shortfalls += 1
        if gross <= 0:
            return
        payer_place.wealth -= gross
    else:
        gov.reserves -= gross
    agent.wealth += gross
    world.ledger.post(tick, payer_key, agent_key(agent.id), gross, WAGE)
    tax = gov.tax_on(gross)
    if tax > 0:
        agent.wealth -= tax
        gov.reserves += tax
        world.ledger.post(tick, agent_key(agent.id), GOVERNMENT, tax, TAX)


def settle_day(world) -> None:
    """End-of-day settlement, in fixed order: wages, takeover wages, taxes
    (inline with each wage), subsidies, public services, fixed costs."""
    gov = world.government
    eco = world.economy_params
    tick = world.clock.tick

    for agent in world.agents:
        if agent.health.compartment == 7:  # DEAD
            continue
        employer_id = agent.employer
        if employer_id is None:
            continue
        employer = world.places[employer_id]
        if agent.worked_today:
            _pay_wage(world, employer, place_key(employer.id), agent, gov, tick)
        elif gov.wage_takeover_active and world.is_place_closed(employer):
            _pay_wage(world, None, GOVERNMENT, agent, gov, tick)
        agent.worked_today = False

    subsidy = gov.subsidy_per_unemployed
    if subsidy > 0:
        for agent in world.agents:
            if agent.health.compartment == 7:
                continue
            # Unemployed adults: retirees and working-age agents without a job
            if agent.age_group == 3 or (agent.age_group == 2
                                        and agent.employer is None):
                gov.reserves -= subsidy
                agent.wealth += subsidy
                world.ledger.post(tick, GOVERNMENT, agent_key(agent.id),
                                  subsidy, SUBSIDY)

    cost = gov.public_service_cost
    if cost > 0 and world.public_places:
        share = cost // len(world.public_places)
        if share > 0:
            for place in world.public_places:
                gov.reserves -= share
                place.wealth += share
                world.ledger.post(tick, GOVERNMENT, place_key(place.id),
                                  share, PUBLIC_SERVICE)

    if eco.fixed_costs_enabled and eco.fixed_cost_per_day > 0:
        for place in world.shops:
            place.wealth -= eco.fixed_cost_per_day
            gov.reserves += eco.fixed_cost_per_day
            world.ledger.post(tick, place_key(place.id), GOVERNMENT,
                              eco.fixed_cost_per_day, FIXED_COST)
            if place.wealth < 0:
                place.insolvent = True

    # Daily consumption draws down household stocks
    for household in world.households:
        if household.stock_days > 0:
            household.stock_days -= 1.0
            if household.stock_days < 0:
                household.stock_days = 0.0


def total_money(world) -> int:
    """Sum of agent wealth, place wealth, and government reserves."""
    return (sum(a.wealth for a in world.agents)
            + sum(p.wealth for p in world.places)
            + world.government.reserves)


def money_velocity(ledger: Ledger, total: int, window_days: int,
                   ticks_per_day: int, end_tick: int) -> float:
    """Purchase volume over the window divided by total money x days."""
    assert window_days >= 1
    start = end_tick - window_days * ticks_per_day
    volume = 0
    for tick, _payer, _payee, amount, reason in reversed(ledger.entries):
        if tick <= start:
            break
        if reason in PURCHASE_REASONS:
            volume += amount
    if total <= 0:
        return 0.0
    return volume / (total * window_days)


def replay_ledger(initial: dict[str, int], ledger: Ledger) -> dict[str, int]:
    """Reconstruct every wealth field from initial endowments plus the ledger."""
    balances = dict(initial)
    for _tick, payer, payee, amount, _reason in ledger.entries:
        balances[payer] = balances.get(payer, 0) - amount
        balances[payee] = balances.get(payee, 0) + amount
    return balances
