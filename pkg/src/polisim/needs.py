"""Container model of needs: decay, composite safety, urgency, expected
activity gains, and the deliberation rule that picks an activity.

Each need is a reservoir in [0, 1] (compliance alone may go to -1) that
depletes over time and refills through activities.  Deliberation scores a
candidate activity as sum over needs of urgency x expected gain and picks
the argmax; ties break by a fixed activity-kind order, then lowest place id.
"""

from __future__ import annotations

from .config import (
    ACTIVITY_KINDS,
    GAIN_KEYS,
    NEED_NAMES,
    NeedsSection,
    ScenarioConfig,
    resolved_gains,
)

# Need indices
SAFETY, BELONGING, SELF_ESTEEM, AUTONOMY, SURVIVAL = range(5)

# Activity-kind codes, in tie-break order (see config.ACTIVITY_KINDS)
(
    ACT_REST,
    ACT_WORK_OFFICE,
    ACT_WORK_HOME,
    ACT_SCHOOL,
    ACT_STAY,
    ACT_SHOP_ESS,
    ACT_SHOP_NONESS,
    ACT_LEISURE,
    ACT_DOCTOR,
) = range(9)

N_ACTIVITIES = len(ACTIVITY_KINDS)

# Kinds performed at the agent's own home
HOME_KINDS = frozenset((ACT_REST, ACT_STAY, ACT_WORK_HOME))

# Discretionary outings: the kinds a tired agent discounts
OUTING_KINDS = frozenset((ACT_SHOP_ESS, ACT_SHOP_NONESS, ACT_LEISURE))


class Activity:
    """A concrete activity choice: what, where, and whether it defies policy."""

    __slots__ = ("kind", "place", "breaks_policy")

    def __init__(self, kind: int, place: int, breaks_policy: bool = False):
        self.kind = kind
        self.place = place
        self.breaks_policy = breaks_policy

    def broken(self) -> "Activity":
        return Activity(self.kind, self.place, True)

    def __repr__(self) -> str:  # pragma: no cover
        flag = ", breaks_policy" if self.breaks_policy else ""
        return f"Activity({ACTIVITY_KINDS[self.kind]}, place={self.place}{flag})"


class NeedsCalibration:
    """Shared numeric calibration: thresholds, decay rates, gain table."""

    __slots__ = (
        "thresholds", "decays", "sub_decay_risk", "sub_decay_compliance",
        "sub_decay_finsafety", "w_risk", "w_compliance", "w_finsafety",
        "include_financial_safety", "food_full_days", "financial_survival_scale",
        "financial_safety_scale", "risk_scale", "compliance_break_scale",
        "conformity_scale", "sick_rest_multiplier", "sick_neglect_decay",
        "tired_outing_penalty", "gains",
    )

    def __init__(self, section: NeedsSection,
                 gains: dict[str, dict[str, float]]):
        self.thresholds = tuple(getattr(section.thresholds, n) for n in NEED_NAMES)
        self.decays = tuple(getattr(section.decay, n) for n in NEED_NAMES)
        self.sub_decay_risk = section.subneed_decay.risk_avoidance
        self.sub_decay_compliance = section.subneed_decay.compliance
        self.sub_decay_finsafety = section.subneed_decay.financial_safety
        self.w_risk = section.safety_weights.risk_avoidance
        self.w_compliance = section.safety_weights.compliance
        self.w_finsafety = section.safety_weights.financial_safety
        self.include_financial_safety = section.include_financial_safety
        self.food_full_days = section.food_full_days
        self.financial_survival_scale = section.financial_survival_scale
        self.financial_safety_scale = section.financial_safety_scale
        self.risk_scale = section.risk_scale
        self.compliance_break_scale = section.compliance_break_scale
        self.conformity_scale = section.conformity_scale
        self.sick_rest_multiplier = section.sick_rest_multiplier
        self.sick_neglect_decay = section.sick_neglect_decay
        self.tired_outing_penalty = section.tired_outing_penalty
        # gains[kind] -> 8-tuple in GAIN_KEYS order
        self.gains = tuple(
            tuple(gains[ACTIVITY_KINDS[k]].get(key, 0.0) for key in GAIN_KEYS)
            for k in range(N_ACTIVITIES)
        )

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "NeedsCalibration":
        return cls(cfg.needs, resolved_gains(cfg))


class NeedsState:
    """Per-agent need levels.

    ``levels`` holds the five top needs; safety is a composite recomputed
    from the subneed levels.  All levels live in [0, 1] except compliance,
    which may go negative when rules are broken.
    """

    __slots__ = ("levels", "food_safety", "financial_survival",
                 "risk_avoidance", "compliance", "financial_safety")

    def __init__(self, levels=None, food_safety=1.0, financial_survival=1.0,
                 risk_avoidance=1.0, compliance=1.0, financial_safety=1.0):
        self.levels = list(levels) if levels is not None else [1.0] * 5
        self.food_safety = food_safety
        self.financial_survival = financial_survival
        self.risk_avoidance = risk_avoidance
        self.compliance = compliance
        self.financial_safety = financial_safety

    def copy(self) -> "NeedsState":
        return NeedsState(self.levels, self.food_safety, self.financial_survival,
                          self.risk_avoidance, self.compliance,
                          self.financial_safety)


def composite_safety(state: NeedsState, cal: NeedsCalibration) -> float:
    """min(min(food, financial survival), weighted mean of the rest)."""
    floor = state.food_safety
    if state.financial_survival < floor:
        floor = state.financial_survival
    num = cal.w_risk * state.risk_avoidance + cal.w_compliance * state.compliance
    den = cal.w_risk + cal.w_compliance
    if cal.include_financial_safety:
        num += cal.w_finsafety * state.financial_safety
        den += cal.w_finsafety
    mean = num / den
    return mean if mean < floor else floor


def food_safety_level(essential_stock: float,
                      full_days: float = 14.0) -> float:
    """Fully satisfied at a two-week stock, linear down to empty."""
    level = essential_stock / full_days
    if level > 1.0:
        return 1.0
    return level if level > 0.0 else 0.0


def refresh_derived(state: NeedsState, cal: NeedsCalibration,
                    stock_days: float, wealth: int) -> None:
    """Recompute stock- and wealth-driven subneeds, then the safety composite."""
    state.food_safety = food_safety_level(stock_days, cal.food_full_days)
    fs = wealth / cal.financial_survival_scale
    state.financial_survival = 1.0 if fs > 1.0 else (fs if fs > 0.0 else 0.0)
    fb = wealth / cal.financial_safety_scale
    state.financial_safety = 1.0 if fb > 1.0 else (fb if fb > 0.0 else 0.0)
    state.levels[SAFETY] = composite_safety(state, cal)


def decay(state: NeedsState, ticks_elapsed: int,
          cal: NeedsCalibration) -> NeedsState:
    """Deplete every need by its per-tick rate; decay never raises a level."""
    if ticks_elapsed <= 0:
        return state
    lv = state.levels
    dc = cal.decays
    for i in (BELONGING, SELF_ESTEEM, AUTONOMY, SURVIVAL):
        v = lv[i] - dc[i] * ticks_elapsed
        lv[i] = v if v > 0.0 else 0.0
    v = state.risk_avoidance - cal.sub_decay_risk * ticks_elapsed
    state.risk_avoidance = v if v > 0.0 else 0.0
    v = state.compliance - cal.sub_decay_compliance * ticks_elapsed
    state.compliance = v if v > -1.0 else -1.0
    v = state.financial_safety - cal.sub_decay_finsafety * ticks_elapsed
    state.financial_safety = v if v > 0.0 else 0.0
    lv[SAFETY] = composite_safety(state, cal)
    return state


def urgency(state: NeedsState, importance: tuple,
            cal: NeedsCalibration) -> tuple:
    """Per-need urgency: importance x normalized deficit below threshold."""
    lv = state.levels
    th = cal.thresholds
    out = []
    for i in range(5):
        deficit = th[i] - lv[i]
        out.append(importance[i] * deficit / th[i] if deficit > 0.0 else 0.0)
    return tuple(out)


def expected_gains(cal: NeedsCalibration, kind: int, breaks_policy: bool,
                   leaves_home: bool, prevalence: float, risk_weight: float,
                   compliance_propensity: float, believes_sick: bool,
                   conformity_frac: float) -> tuple:
    """Expected per-need gain vector for one candidate activity.

    Returns an 8-tuple in GAIN_KEYS order (five needs, then the food_safety,
    risk_avoidance, compliance subneed gains).
    """
    g = cal.gains[kind]
    g_safety, g_belonging, g_esteem, g_autonomy, g_survival, g_food, g_risk, \
        g_compliance = g
    if leaves_home and prevalence > 0.0:
        g_risk = g_risk - cal.risk_scale * risk_weight * prevalence
    if breaks_policy:
        g_compliance = -cal.compliance_break_scale * compliance_propensity
    if believes_sick and kind == ACT_REST:
        g_survival *= cal.sick_rest_multiplier
    if conformity_frac > 0.0:
        g_survival += cal.conformity_scale * conformity_frac
    return (g_safety, g_belonging, g_esteem, g_autonomy, g_survival,
            g_food, g_risk, g_compliance)


def score_gains(gains: tuple, urg: tuple, cal: NeedsCalibration) -> float:
    """Fold subneed gains into safety and take the urgency-weighted sum."""
    den = cal.w_risk + cal.w_compliance
    if cal.include_financial_safety:
        den += cal.w_finsafety
    safety_eff = (gains[0] + gains[5]
                  + (cal.w_risk * gains[6] + cal.w_compliance * gains[7]) / den)
    return (urg[SAFETY] * safety_eff
            + urg[BELONGING] * gains[1]
            + urg[SELF_ESTEEM] * gains[2]
            + urg[AUTONOMY] * gains[3]
            + urg[SURVIVAL] * gains[4])


def choose_activity(state: NeedsState, importance: tuple,
                    filtered_context: list, removed: list,
                    cal: NeedsCalibration, prevalence: float,
                    risk_weight: float, compliance_propensity: float,
                    believes_sick: bool,
                    cluster_counts, cluster_size: int,
                    tired: bool = False) -> Activity:
    """Pick the best-scoring activity from the filtered context.

    Policy-removed candidates are considered, flagged breaks_policy, only
    when the autonomy level has fallen below its threshold.  A tired agent
    (one who worked or studied earlier the same day) discounts discretionary
    outings (shopping, leisure) by a flat score penalty.  Ties break by
    activity-kind order (the order of ACTIVITY_KINDS), then lowest place id.
    """
    urg = urgency(state, importance, cal)
    candidates = filtered_context
    if removed and state.levels[AUTONOMY] < cal.thresholds[AUTONOMY]:
        candidates = filtered_context + [act.broken() for act in removed]
    best = None
    best_score = -1e308
    best_key = (N_ACTIVITIES, 1 << 60)
    for act in candidates:
        kind = act.kind
        if cluster_size > 0:
            conf = cluster_counts[kind] / cluster_size
        else:
            conf = 0.0
        gains = expected_gains(
            cal, kind, act.breaks_policy, kind not in HOME_KINDS,
            prevalence, risk_weight, compliance_propensity, believes_sick, conf,
        )
        s = score_gains(gains, urg, cal)
        if tired and kind in OUTING_KINDS:
            s -= cal.tired_outing_penalty
        key = (kind, act.place)
        if s > best_score or (s == best_score and key < best_key):
            best = act
            best_score = s
            best_key = key
    assert best is not None, "filtered context must be nonempty"
    return best


def apply_effects(state: NeedsState, gains: tuple,
                  cal: NeedsCalibration, believes_sick: bool,
                  resting: bool) -> NeedsState:
    """Credit realized gains, clamped to each level's domain.

    A believed-sick agent doing anything but resting pays an extra survival
    depletion (neglecting the need to rest).
    """
    lv = state.levels
    for i in (BELONGING, SELF_ESTEEM, AUTONOMY, SURVIVAL):
        v = lv[i] + gains[i]
        lv[i] = 1.0 if v > 1.0 else (v if v > 0.0 else 0.0)
    if believes_sick and not resting:
        v = lv[SURVIVAL] - cal.sick_neglect_decay
        lv[SURVIVAL] = v if v > 0.0 else 0.0
    v = state.risk_avoidance + gains[6]
    state.risk_avoidance = 1.0 if v > 1.0 else (v if v > 0.0 else 0.0)
    v = state.compliance + gains[7]
    state.compliance = 1.0 if v > 1.0 else (v if v > -1.0 else -1.0)
    # food_safety gain realizes through the stock purchase itself; the level
    # is derived, so nothing to add here.
    lv[SAFETY] = composite_safety(state, cal)
    return state
