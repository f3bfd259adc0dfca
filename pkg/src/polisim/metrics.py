"""Per-tick metrics rows, per-run containers, and batch aggregation."""

from __future__ import annotations

import math

from .config import ACTIVITY_KINDS, AGE_GROUPS, PLACE_KINDS
from .epidemic import COMPARTMENT_NAMES, DEAD, I1, I2, O1, O2

# Column order of a metrics row.  Everything before the string columns is
# numeric; aggregation covers the numeric columns only.
COLUMNS = (
    ["tick", "day", "segment", "is_weekend"]
    + [f"n_{name}" for name in COMPARTMENT_NAMES]
    + ["detected_total", "infected_active", "ever_exposed"]
    + [f"act_{name}" for name in ACTIVITY_KINDS]
    + [f"occ_{name}" for name in PLACE_KINDS]
    + [f"mean_wealth_{g}" for g in AGE_GROUPS]
    + ["wealth_essential_shops", "wealth_nonessential_shops",
       "wealth_workplaces", "wealth_leisure",
       "gov_reserves", "velocity_daily", "total_money", "violations"]
    + ["activations", "policies_active"]
)

N_NUMERIC = len(COLUMNS) - 2

_COMPARTMENT_OFFSET = 4
_PK_ESSENTIAL = PLACE_KINDS.index("essential_shop")
_PK_NONESSENTIAL = PLACE_KINDS.index("nonessential_shop")
_PK_WORKPLACE = PLACE_KINDS.index("workplace")
_PK_LEISURE = PLACE_KINDS.index("leisure")
_PK_STATION = PLACE_KINDS.index("station")


def build_row(world, act_counts, violations: int, velocity,
              activations: list[str], station_transit: int) -> list:
    """Assemble one tick's metrics row from the stepped world."""
    from . import economy

    clock = world.clock
    compartments = [0] * 8
    wealth_sum = [0] * 4
    group_n = [0] * 4
    for agent in world.agents:
        compartments[agent.health.compartment] += 1
        wealth_sum[agent.age_group] += agent.wealth
        group_n[agent.age_group] += 1
    infected_active = (compartments[I1] + compartments[I2]
                       + compartments[O1] + compartments[O2])

    occ = [0] * 8
    place_wealth = [0] * 8
    for place in world.places:
        occ[place.kind] += len(place.occupants)
        place_wealth[place.kind] += place.wealth
    occ[_PK_STATION] += station_transit

    row = [clock.tick, clock.day_index, clock.segment,
           1 if clock.is_weekend else 0]
    row.extend(compartments)
    row.extend([world.detected_total, infected_active, world.ever_exposed])
    row.extend(act_counts)
    row.extend(occ)
    for g in range(4):
        row.append(wealth_sum[g] / group_n[g] if group_n[g] else 0.0)
    row.extend([place_wealth[_PK_ESSENTIAL], place_wealth[_PK_NONESSENTIAL],
                place_wealth[_PK_WORKPLACE], place_wealth[_PK_LEISURE]])
    row.append(world.government.reserves)
    row.append(velocity if velocity is not None else -1.0)
    row.append(economy.total_money(world))
    row.append(violations)
    row.append(";".join(activations))
    row.append(";".join(sorted(world.policy_set.active_kinds())))
    return row


class RunMetrics:
    """One run's per-tick rows plus identifying metadata."""

    __slots__ = ("seed", "columns", "rows")

    def __init__(self, seed: int, rows: list):
        self.seed = seed
        self.columns = list(COLUMNS)
        self.rows = rows

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def peak_infected(self) -> int:
        values = self.column("infected_active")
        return max(values) if values else 0

    def peak_tick(self) -> int:
        values = self.column("infected_active")
        if not values:
            return 0
        peak = max(values)
        ticks = self.column("tick")
        return ticks[values.index(peak)]

    def total_deaths(self) -> int:
        values = self.column("n_Dead")
        return values[-1] if values else 0


class BatchSummary:
    """Per-tick mean/SD/95% CI half-width over runs, plus scalar summaries."""

    __slots__ = ("runs", "columns", "mean", "sd", "ci95",
                 "peak_infected_mean", "peak_tick_mean", "deaths_mean")

    def __init__(self, runs, columns, mean, sd, ci95,
                 peak_infected_mean, peak_tick_mean, deaths_mean):
        self.runs = runs
        self.columns = columns
        self.mean = mean
        self.sd = sd
        self.ci95 = ci95
        self.peak_infected_mean = peak_infected_mean
        self.peak_tick_mean = peak_tick_mean
        self.deaths_mean = deaths_mean

    def mean_column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.mean]

    def ci_column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.ci95]


def summarize(per_run: list[RunMetrics]) -> BatchSummary:
    """Aggregate runs tick by tick; a deterministic fold in seed order."""
    assert per_run, "need at least one run"
    runs = len(per_run)
    ticks = len(per_run[0].rows)
    columns = [c for c in COLUMNS[:N_NUMERIC]]
    mean_rows, sd_rows, ci_rows = [], [], []
    for t in range(ticks):
        means, sds, cis = [], [], []
        for c in range(N_NUMERIC):
            values = [rm.rows[t][c] for rm in per_run]
            m = sum(values) / runs
            if runs > 1:
                var = sum((v - m) ** 2 for v in values) / (runs - 1)
                sd = math.sqrt(var)
            else:
                sd = 0.0
            means.append(m)
            sds.append(sd)
            cis.append(1.96 * sd / math.sqrt(runs))
        mean_rows.append(means)
        sd_rows.append(sds)
        ci_rows.append(cis)
    peaks = [rm.peak_infected() for rm in per_run]
    peak_ticks = [rm.peak_tick() for rm in per_run]
    deaths = [rm.total_deaths() for rm in per_run]
    return BatchSummary(
        runs, columns, mean_rows, sd_rows, ci_rows,
        sum(peaks) / runs, sum(peak_ticks) / runs, sum(deaths) / runs,
    )
