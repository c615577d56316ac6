"""Agent-based strategy simulation: heterogeneous restaurants, consumers, and
delivery workers interacting through the platform, period by period.

One run is strictly sequential with a canonical agent order (restaurants by id,
consumers by id, workers by id); agent populations live in struct-of-arrays
form so each period is a handful of vectorized passes. Runs are independent:
every run derives its own random streams, so parallel execution is bit-identical
to serial.

Per period: market multipliers and entries are drawn, restaurants adjust menu
prices, consumers each order at most one basket from their best-scoring
same-region restaurant, accepted orders are dispatched round-robin across
willing workers, welfare and reputation are updated, the platform hill-climbs
its controls on its KPI window at the configured interval, and exits and
emergency subsidies are applied.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .config import Controls, RandomStream, SimConfig, derive_streams

# Scoring and service-time model constants. Capacity is deliberately scarce
# relative to the consumer base (150 workers x 5 orders < 1000 consumers), so
# the wage genuinely governs effective capacity through acceptance; the
# acceptance floor scales the worker transition zone down to a single order (a
# worker tolerates per-order losses that could not push them into the
# transition zone within one loaded period).
T_REF_MINUTES = 30.0
BASE_PREP_MINUTES = 20.0
DELIVERY_LEG_SHARE = 0.5
CAP_PER_WORKER = 8
CONGESTION_CAP = 2.0
LOYALTY_WEIGHT = 0.5
TASTE_WEIGHT = 0.25

# Reputation update: Phi tracks on-time rate plus clamped mean satisfaction
# against a neutral level of 1.25 (on-time ~0.85 with satisfaction ~0.4 holds
# reputation steady; service failures pull it down).
XI_PHI = 0.05
REPUTATION_NEUTRAL = 1.25

# A worker who reserves capacity the market does not use wastes shift time:
# each unused delivery slot (up to half a shift) costs waiting minutes at the
# worker's own time-cost factor. Under-employed workers therefore attrite
# instead of accumulating as a free capacity buffer, which keeps effective
# capacity tied to the wage the platform actually funds.
SLOT_WAIT_MINUTES = 2.5
MAX_CHARGED_SLOTS = 4
PHI_INITIAL = 0.6
PHI_ENTRY_PIVOT = 0.6
ENTRY_GAIN = 2.0
ENTRY_TRIALS_RESTAURANTS = 5
ENTRY_TRIALS_WORKERS = 8

_MAX_MENU = 8

# Ordering rule: a consumer orders when the best score clears the outside
# option, with the composed market multiplier shifting the bar (hot markets
# lower it, cold ones raise it). The outside option keeps a marginal-consumer
# mass in the healthy steady state; without it every consumer clears the bar
# and demand stops responding to fees, service, or reputation.
OUTSIDE_OPTION = 0.3
DEMAND_SHIFT_SCALE = 0.5

# KPI means feeding the strategy objective are smoothed over at least this
# many periods so one noisy market draw does not whipsaw the hill-climb.
KPI_WINDOW_PERIODS = 6

# Hill-climb decisions treat objective changes inside this relative band as
# statistical ties; a tie drifts the control toward its lower bound, extending
# the suite-wide lexicographic-minimum tie-break convention to the adaptive
# strategy. Controls the platform's objective does not reward therefore sink
# instead of random-walking.
TIE_EPSILON = 0.05

# Worker-distress response of welfare-weighted strategies: when a meaningful
# share of the active workforce sits in the transition zone, the next wage
# move is forced upward (the zone prompts wage increases, not only subsidies).
# A pure-GMV objective contains no worker term, so it has no such response;
# this is precisely the mechanism that makes chasing GMV alone unsustainable.
# The response is also how a welfare strategy escapes decline spirals, where a
# plain hill-climb is blind (the objective falls no matter what moved last, so
# it reverses every decision and oscillates while the spiral completes).
WAGE_DISTRESS_ZONE_SHARE = 0.10

_CONTROL_ORDER = ("commission", "delivery_fee", "wage")
_INITIAL_DIRECTIONS = (-1.0, -1.0, 1.0)


@dataclass(frozen=True)
class RestaurantAgent:
    id: int
    menu: tuple[float, ...]
    fixed_cost: float
    quality: float
    reputation: float
    cumulative_utility: float
    region: str
    taste: float
    active: bool


@dataclass(frozen=True)
class ConsumerAgent:
    id: int
    budget: float
    valuation: float
    price_sensitivity: float
    time_sensitivity: float
    quality_sensitivity: float
    loyalty: float
    region: str
    taste_preference: float
    cumulative_utility: float


@dataclass(frozen=True)
class WorkerAgent:
    id: int
    time_cost_factor: float
    skill: float
    experience: float
    satisfaction: float
    cumulative_utility: float
    active: bool


@dataclass
class PlatformLedger:
    controls: Controls
    strategy: str
    hybrid_lambda: float
    reputation: float = PHI_INITIAL
    subsidy_paid: float = 0.0
    gmv_history: list[float] = field(default_factory=list)
    sw_history: list[float] = field(default_factory=list)
    on_time_history: list[float] = field(default_factory=list)
    # hill-climb memory: per-control direction and the raw KPI pair captured
    # at that control's last move
    directions: list[float] = field(default_factory=lambda: list(_INITIAL_DIRECTIONS))
    reference_kpi: list[tuple[float, float] | None] = field(
        default_factory=lambda: [None, None, None]
    )
    cycle: int = 0


@dataclass(frozen=True)
class PeriodMetrics:
    """Per-period measurements; the first block is the reported metric suite,
    the second an audit trail backing the conservation/accounting checks."""

    gmv: float
    sw: float
    reputation: float
    active_restaurants: int
    active_workers: int
    avg_restaurant_utility: float
    avg_consumer_utility: float
    avg_worker_utility: float
    restaurant_satisfaction: float
    worker_satisfaction: float
    consumer_satisfaction: float
    # audit fields
    commission: float
    delivery_fee: float
    wage: float
    orders: int
    late_orders: int
    on_time_rate: float
    commission_revenue: float
    restaurant_net_revenue: float
    gross_basket_value: float
    subsidies_paid: float
    serving_restaurants: int
    delivering_workers: int
    entries_restaurants: int
    exits_restaurants: int
    entries_workers: int
    exits_workers: int


METRIC_FIELDS = tuple(f.name for f in fields(PeriodMetrics))


@dataclass
class RunResult:
    run_index: int
    strategy: str
    seed: int
    metrics: list[PeriodMetrics]

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(m, name) for m in self.metrics], dtype=float)

    def final(self, name: str) -> float:
        return float(getattr(self.metrics[-1], name))

    def to_dict(self) -> dict:
        return {
            "run_index": self.run_index,
            "strategy": self.strategy,
            "seed": self.seed,
            "metrics": [
                {name: getattr(m, name) for name in METRIC_FIELDS} for m in self.metrics
            ],
        }

    @staticmethod
    def from_dict(doc: dict) -> "RunResult":
        return RunResult(
            run_index=int(doc["run_index"]),
            strategy=str(doc["strategy"]),
            seed=int(doc["seed"]),
            metrics=[PeriodMetrics(**m) for m in doc["metrics"]],
        )


class Environment:
    """Mutable world state of one simulation run (struct-of-arrays)."""

    def __init__(self, config: SimConfig, streams: dict[str, RandomStream]):
        self.config = config
        self.streams = streams
        self.bounds = config.control_bounds()
        self.period = 0
        self.last_period_orders = 0
        self.platform = PlatformLedger(
            controls=self.bounds.midpoint(),
            strategy=config.platform_strategy,
            hybrid_lambda=config.hybrid_lambda,
        )
        rng = streams["agents"].generator
        self._init_restaurants(rng, config.n_restaurants)
        self._init_consumers(rng, config.n_consumers)
        self._init_workers(rng, config.n_workers)
        # per-period fields, populated by the period steps
        self.demand_multiplier = 1.0
        self.congestion = 0.0
        self.t_expected = BASE_PREP_MINUTES
        self.period_controls = self.platform.controls
        self.order_consumers = np.empty(0, dtype=np.int64)
        self.order_restaurants = np.empty(0, dtype=np.int64)
        self.order_prices = np.empty(0)
        self.c_period_utility = np.zeros(config.n_consumers)
        self.r_period_revenue = np.zeros(config.n_restaurants)
        self.r_period_utility = np.zeros(config.n_restaurants)
        self.w_period_utility = np.zeros(config.n_workers)
        self.w_period_orders = np.zeros(config.n_workers, dtype=np.int64)
        self.delivered_orders = 0
        self.late_orders = 0
        self.on_time_rate = 1.0
        self.period_satisfaction = (0.0, 0.0, 0.0)
        self.entries_restaurants = 0
        self.entries_workers = 0

    # -- population blocks ---------------------------------------------------

    def _init_restaurants(self, rng: np.random.Generator, n: int) -> None:
        block = _draw_restaurant_block(rng, n, self.config)
        (
            self.r_menu,
            self.r_fixed_cost,
            self.r_quality,
            self.r_reputation,
            self.r_region,
            self.r_taste,
        ) = block
        self.r_active = np.ones(n, dtype=bool)
        self.r_cumulative = np.zeros(n)
        self.r_last_revenue = np.zeros(n)
        self.r_prev_revenue = np.zeros(n)

    def _init_consumers(self, rng: np.random.Generator, n: int) -> None:
        (
            self.c_budget,
            self.c_valuation,
            self.c_price_sens,
            self.c_time_sens,
            self.c_quality_sens,
            self.c_loyalty,
            self.c_region,
            self.c_taste,
        ) = _draw_consumer_block(rng, n, self.config)
        self.c_cumulative = np.zeros(n)

    def _init_workers(self, rng: np.random.Generator, n: int) -> None:
        (
            self.w_gamma,
            self.w_skill,
            self.w_experience,
            self.w_satisfaction,
        ) = _draw_worker_block(rng, n, self.config)
        self.w_active = np.ones(n, dtype=bool)
        self.w_cumulative = np.zeros(n)

    def _append_restaurants(self, n: int) -> None:
        if n <= 0:
            return
        rng = self.streams["agents"].generator
        menu, fc, q, rep, region, taste = _draw_restaurant_block(rng, n, self.config)
        self.r_menu = np.concatenate([self.r_menu, menu])
        self.r_fixed_cost = np.concatenate([self.r_fixed_cost, fc])
        self.r_quality = np.concatenate([self.r_quality, q])
        self.r_reputation = np.concatenate([self.r_reputation, rep])
        self.r_region = np.concatenate([self.r_region, region])
        self.r_taste = np.concatenate([self.r_taste, taste])
        self.r_active = np.concatenate([self.r_active, np.ones(n, dtype=bool)])
        self.r_cumulative = np.concatenate([self.r_cumulative, np.zeros(n)])
        self.r_last_revenue = np.concatenate([self.r_last_revenue, np.zeros(n)])
        self.r_prev_revenue = np.concatenate([self.r_prev_revenue, np.zeros(n)])

    def _append_workers(self, n: int) -> None:
        if n <= 0:
            return
        rng = self.streams["agents"].generator
        g, s, e, sat = _draw_worker_block(rng, n, self.config)
        self.w_gamma = np.concatenate([self.w_gamma, g])
        self.w_skill = np.concatenate([self.w_skill, s])
        self.w_experience = np.concatenate([self.w_experience, e])
        self.w_satisfaction = np.concatenate([self.w_satisfaction, sat])
        self.w_active = np.concatenate([self.w_active, np.ones(n, dtype=bool)])
        self.w_cumulative = np.concatenate([self.w_cumulative, np.zeros(n)])

    # -- agent views ----------------------------------------------------------

    def restaurant(self, i: int) -> RestaurantAgent:
        menu = self.r_menu[i]
        return RestaurantAgent(
            id=i,
            menu=tuple(float(p) for p in menu[~np.isnan(menu)]),
            fixed_cost=float(self.r_fixed_cost[i]),
            quality=float(self.r_quality[i]),
            reputation=float(self.r_reputation[i]),
            cumulative_utility=float(self.r_cumulative[i]),
            region=self.config.region_options[int(self.r_region[i])],
            taste=float(self.r_taste[i]),
            active=bool(self.r_active[i]),
        )

    def consumer(self, i: int) -> ConsumerAgent:
        return ConsumerAgent(
            id=i,
            budget=float(self.c_budget[i]),
            valuation=float(self.c_valuation[i]),
            price_sensitivity=float(self.c_price_sens[i]),
            time_sensitivity=float(self.c_time_sens[i]),
            quality_sensitivity=float(self.c_quality_sens[i]),
            loyalty=float(self.c_loyalty[i]),
            region=self.config.region_options[int(self.c_region[i])],
            taste_preference=float(self.c_taste[i]),
            cumulative_utility=float(self.c_cumulative[i]),
        )

    def worker(self, i: int) -> WorkerAgent:
        return WorkerAgent(
            id=i,
            time_cost_factor=float(self.w_gamma[i]),
            skill=float(self.w_skill[i]),
            experience=float(self.w_experience[i]),
            satisfaction=float(self.w_satisfaction[i]),
            cumulative_utility=float(self.w_cumulative[i]),
            active=bool(self.w_active[i]),
        )

    @property
    def n_restaurants(self) -> int:
        return self.r_active.size

    @property
    def n_consumers(self) -> int:
        return self.c_budget.size

    @property
    def n_workers(self) -> int:
        return self.w_active.size


def _draw_restaurant_block(rng: np.random.Generator, n: int, cfg: SimConfig):
    lo, hi = cfg.menu_size_range
    sizes = rng.integers(lo, hi + 1, size=n)
    menu = rng.uniform(cfg.price_range[0], cfg.price_range[1], size=(n, _MAX_MENU))
    menu[np.arange(_MAX_MENU)[None, :] >= sizes[:, None]] = np.nan
    fixed_cost = rng.uniform(cfg.fixed_cost_range[0], cfg.fixed_cost_range[1], size=n)
    quality = rng.uniform(cfg.quality_range[0], cfg.quality_range[1], size=n)
    reputation = rng.uniform(cfg.reputation_range[0], cfg.reputation_range[1], size=n)
    region = rng.integers(0, len(cfg.region_options), size=n)
    taste = rng.uniform(0.0, 1.0, size=n)
    return menu, fixed_cost, quality, reputation, region, taste


def _draw_consumer_block(rng: np.random.Generator, n: int, cfg: SimConfig):
    budget = rng.uniform(cfg.consumer_budget_range[0], cfg.consumer_budget_range[1], size=n)
    valuation = rng.uniform(cfg.consumer_value_range[0], cfg.consumer_value_range[1], size=n)
    price_sens = rng.uniform(
        cfg.price_sensitivity_range[0], cfg.price_sensitivity_range[1], size=n
    )
    time_sens = rng.uniform(
        cfg.time_sensitivity_range[0], cfg.time_sensitivity_range[1], size=n
    )
    quality_sens = rng.uniform(
        cfg.quality_sensitivity_range[0], cfg.quality_sensitivity_range[1], size=n
    )
    loyalty = rng.uniform(
        cfg.platform_loyalty_range[0], cfg.platform_loyalty_range[1], size=n
    )
    region = rng.integers(0, len(cfg.region_options), size=n)
    taste = rng.uniform(
        cfg.taste_preference_range[0], cfg.taste_preference_range[1], size=n
    )
    return budget, valuation, price_sens, time_sens, quality_sens, loyalty, region, taste


def _draw_worker_block(rng: np.random.Generator, n: int, cfg: SimConfig):
    gamma = rng.uniform(
        cfg.time_cost_factor_range[0], cfg.time_cost_factor_range[1], size=n
    )
    skill = rng.uniform(cfg.skill_level_range[0], cfg.skill_level_range[1], size=n)
    experience = rng.uniform(cfg.experience_range[0], cfg.experience_range[1], size=n)
    satisfaction = rng.uniform(
        cfg.satisfaction_range[0], cfg.satisfaction_range[1], size=n
    )
    return gamma, skill, experience, satisfaction


def init_env(config: SimConfig, streams: dict[str, RandomStream] | None = None, seed: int = 0,
             run_index: int = 0) -> Environment:
    """Populate a fresh environment; controls start at the midpoint of each bound."""
    if streams is None:
        streams = derive_streams(seed, run_index)
    return Environment(config, streams)


# ---------------------------------------------------------------------------
# period steps (Algorithm: market -> prices -> orders -> delivery -> welfare
# -> reputation -> strategy -> bookkeeping)
# ---------------------------------------------------------------------------


def update_market_and_add(env: Environment) -> None:
    """Draw this period's market multipliers and reputation-gated entries."""
    cfg = env.config
    rng = env.streams["market"].generator
    growth = rng.uniform(*cfg.market_growth_range)
    competition = rng.uniform(*cfg.competition_intensity_range)
    shock = rng.uniform(*cfg.economic_shock_range)
    seasonal = rng.uniform(*cfg.seasonal_factor_range)
    network = rng.uniform(*cfg.network_effect_range)
    env.demand_multiplier = growth * competition * shock * seasonal * network
    p_entry = min(1.0, max(0.0, ENTRY_GAIN * (env.platform.reputation - PHI_ENTRY_PIVOT)))
    new_rest = int(rng.binomial(ENTRY_TRIALS_RESTAURANTS, p_entry))
    new_work = int(rng.binomial(ENTRY_TRIALS_WORKERS, p_entry))
    env._append_restaurants(new_rest)
    env._append_workers(new_work)
    env.entries_restaurants = new_rest
    env.entries_workers = new_work


def update_rest_prices(env: Environment) -> None:
    """Each active restaurant nudges prices with last period's revenue trend and
    drifts toward the market average; prices stay inside the configured band."""
    cfg = env.config
    active = env.r_active
    if not active.any():
        return
    active_menu = env.r_menu[active]
    if np.isnan(active_menu).all():
        return
    market_avg = np.nanmean(active_menu)
    trend = np.sign(env.r_last_revenue - env.r_prev_revenue)
    adjust = (
        env.r_menu * (1.0 + cfg.revenue_price_adjustment_factor * trend[:, None])
        + cfg.price_gap_adjustment_factor * (market_avg - env.r_menu)
    )
    adjust = np.clip(adjust, cfg.price_min, cfg.price_max)
    env.r_menu = np.where(active[:, None], adjust, env.r_menu)


def _service_time(env: Environment) -> float:
    """Expected door-to-door minutes this period, from current load."""
    active_w = env.w_active
    n_active = int(active_w.sum())
    congestion = min(
        CONGESTION_CAP,
        env.last_period_orders / (max(1, n_active) * CAP_PER_WORKER),
    )
    env.congestion = congestion
    mean_skill = float(env.w_skill[active_w].mean()) if n_active else 1.0
    return BASE_PREP_MINUTES / mean_skill * (1.0 + congestion)


def consume_order(env: Environment) -> float:
    """Consumers order at most one basket each from their best-scoring
    same-region restaurant; returns the period's gross merchandise value."""
    fee = env.platform.controls.delivery_fee
    phi = env.platform.reputation
    threshold = OUTSIDE_OPTION + DEMAND_SHIFT_SCALE * (1.0 - env.demand_multiplier)
    t_exp = _service_time(env)
    env.t_expected = t_exp
    n_rest = env.n_restaurants
    basket = np.where(env.r_active, np.nanmin(env.r_menu, axis=1), np.nan)
    order_consumer: list[np.ndarray] = []
    order_restaurant: list[np.ndarray] = []
    for region in range(len(env.config.region_options)):
        rest_ids = np.flatnonzero(env.r_active & (env.r_region == region))
        cons_ids = np.flatnonzero(env.c_region == region)
        if rest_ids.size == 0 or cons_ids.size == 0:
            continue
        b = basket[rest_ids][None, :]
        budget = env.c_budget[cons_ids][:, None]
        with np.errstate(divide="ignore"):  # zero budgets are filtered below
            score = (
                env.c_quality_sens[cons_ids][:, None] * env.r_quality[rest_ids][None, :]
                - env.c_price_sens[cons_ids][:, None] * (b + fee) / budget
                - env.c_time_sens[cons_ids][:, None] * t_exp / T_REF_MINUTES
                + LOYALTY_WEIGHT * env.c_loyalty[cons_ids][:, None] * phi
                + TASTE_WEIGHT
                * (
                    1.0
                    - np.abs(env.c_taste[cons_ids][:, None] - env.r_taste[rest_ids][None, :])
                )
            )
        eligible = (score > threshold) & (b + fee <= budget)
        score = np.where(eligible, score, -np.inf)
        best = np.argmax(score, axis=1)
        ordered = score[np.arange(cons_ids.size), best] > -np.inf
        order_consumer.append(cons_ids[ordered])
        order_restaurant.append(rest_ids[best[ordered]])
    if order_consumer:
        consumers = np.concatenate(order_consumer)
        restaurants = np.concatenate(order_restaurant)
        # canonical placement order: consumers by id
        order = np.argsort(consumers, kind="stable")
        consumers = consumers[order]
        restaurants = restaurants[order]
    else:
        consumers = np.empty(0, dtype=np.int64)
        restaurants = np.empty(0, dtype=np.int64)
    prices = basket[restaurants] if restaurants.size else np.empty(0)
    env.order_consumers = consumers
    env.order_restaurants = restaurants
    env.order_prices = prices
    # consumer utility accrues at order time; late deliveries add disutility later
    env.c_period_utility = np.zeros(env.n_consumers)
    if consumers.size:
        env.c_period_utility[consumers] = (
            env.c_valuation[consumers]
            - env.c_time_sens[consumers] * t_exp
            - (prices + fee)
        )
    env.r_period_revenue = np.zeros(n_rest)
    if restaurants.size:
        np.add.at(env.r_period_revenue, restaurants, prices)
    return float(prices.sum())


def worker_deliver(env: Environment, gmv: float) -> None:
    """Dispatch orders round-robin over willing workers.

    A worker takes orders this period only if the per-order margin (wage minus
    own time cost) clears the transition-zone-scaled floor; orders beyond the
    willing capacity are delivered late, which costs the affected consumers
    additional waiting disutility.
    """
    del gmv
    cfg = env.config
    wage = env.platform.controls.wage
    t_exp = env.t_expected
    n_orders = env.order_prices.size
    env.w_period_utility = np.zeros(env.n_workers)
    env.w_period_orders = np.zeros(env.n_workers, dtype=np.int64)
    floor = cfg.worker_transition_zone / CAP_PER_WORKER
    # delivery-leg time at the worker's own speed; congestion delays consumers
    # (queueing) but does not lengthen the worker's paid leg
    per_order_time = DELIVERY_LEG_SHARE * (BASE_PREP_MINUTES / env.w_skill)
    margin = wage - env.w_gamma * per_order_time
    accepting = env.w_active & (margin >= floor)
    acc_ids = np.flatnonzero(accepting)
    n_acc = acc_ids.size
    delivered = min(n_orders, n_acc * CAP_PER_WORKER) if n_acc else 0
    late = n_orders - delivered
    if delivered:
        base, extra = divmod(delivered, n_acc)
        counts = np.full(n_acc, base, dtype=np.int64)
        counts[:extra] += 1
        env.w_period_orders[acc_ids] = counts
        env.w_period_utility[acc_ids] = counts * margin[acc_ids]
    unused = np.minimum(
        CAP_PER_WORKER - env.w_period_orders, MAX_CHARGED_SLOTS
    ).clip(min=0)
    wait_cost = env.w_gamma * SLOT_WAIT_MINUTES * unused
    env.w_period_utility[env.w_active] -= wait_cost[env.w_active]
    if late:
        late_consumers = env.order_consumers[delivered:]
        env.c_period_utility[late_consumers] -= (
            env.c_time_sens[late_consumers] * t_exp
        )
    env.delivered_orders = delivered
    env.late_orders = late
    env.last_period_orders = n_orders


def calc_sw(env: Environment) -> float:
    """Period social welfare: the sum of all participant utilities.

    Active restaurants bear their fixed cost whether or not they sell; emergency
    subsidies are transfers and never enter this sum.
    """
    alpha = env.platform.controls.commission
    env.r_period_utility = np.where(
        env.r_active,
        (1.0 - alpha) * env.r_period_revenue - env.r_fixed_cost,
        0.0,
    )
    return float(
        env.r_period_utility.sum()
        + env.c_period_utility.sum()
        + env.w_period_utility.sum()
    )


def _satisfaction(env: Environment) -> tuple[float, float, float]:
    """(restaurant, consumer, worker) satisfaction ratios for the period."""
    active_r = env.r_active
    rest = (
        float((env.r_period_utility[active_r] / env.r_fixed_cost[active_r]).mean())
        if active_r.any()
        else 0.0
    )
    ordered = env.order_consumers
    cons = (
        float((env.c_period_utility[ordered] / env.c_valuation[ordered]).mean())
        if ordered.size
        else 0.0
    )
    delivering = env.w_period_orders > 0
    wage = env.platform.controls.wage
    if delivering.any() and wage > 0:
        per_worker = env.w_period_utility[delivering] / (
            wage * env.w_period_orders[delivering]
        )
        work = float(per_worker.mean())
    else:
        work = 0.0
    return rest, cons, work


def update_reputation(env: Environment, sw: float, gmv: float) -> None:
    """Move platform reputation with the on-time rate and mean satisfaction,
    clamped to [0, 1]."""
    del sw, gmv
    n_orders = env.order_prices.size
    on_time = env.delivered_orders / n_orders if n_orders else 1.0
    rest, cons, work = _satisfaction(env)
    env.period_satisfaction = (rest, cons, work)
    sat_norm = float(np.mean([min(1.0, max(0.0, s)) for s in (rest, cons, work)]))
    env.on_time_rate = on_time
    phi = env.platform.reputation + XI_PHI * (on_time + sat_norm - REPUTATION_NEUTRAL)
    env.platform.reputation = min(1.0, max(0.0, phi))


def _normalized(history: list[float], value: float) -> float:
    lo, hi = min(history), max(history)
    if hi <= lo:
        return 0.5
    return (value - lo) / (hi - lo)


def _objective_j(platform: PlatformLedger, gmv_mean: float, sw_mean: float) -> float:
    """Strategy objective from a raw KPI pair, normalized at comparison time so
    stored references stay comparable as the run's history grows.

    Degenerate hybrid weights delegate to the raw pure objective, making the
    lambda=1 control sequence literally identical to the GMV strategy's.
    """
    if platform.strategy == "GMV":
        return gmv_mean
    if platform.strategy == "SW":
        return sw_mean
    lam = platform.hybrid_lambda
    if lam >= 1.0:
        return gmv_mean
    if lam <= 0.0:
        return sw_mean
    return lam * _normalized(platform.gmv_history, gmv_mean) + (1.0 - lam) * _normalized(
        platform.sw_history, sw_mean
    )


def _welfare_weight(platform: PlatformLedger) -> float:
    if platform.strategy == "SW":
        return 1.0
    if platform.strategy == "HYBRID":
        return 1.0 - platform.hybrid_lambda
    return 0.0


def update_strat(env: Environment, gmv: float, sw: float) -> None:
    """Hill-climb one control per update event on the KPI window.

    Controls cycle commission -> fee -> wage; the moving control keeps its
    direction while the objective has not fallen since its last move and
    reverses otherwise. Steps are the adjustment rate times the control's bound
    range, clamped to the bounds. The first event only seeds the references.
    """
    del gmv, sw
    cfg = env.config
    platform = env.platform
    window = max(cfg.strategy_update_interval, KPI_WINDOW_PERIODS)
    gmv_mean = float(np.mean(platform.gmv_history[-window:]))
    sw_mean = float(np.mean(platform.sw_history[-window:]))
    active_w = env.w_active
    in_zone = (
        active_w
        & (env.w_cumulative > cfg.worker_exit_threshold)
        & (env.w_cumulative <= cfg.worker_transition_zone)
    )
    zone_share = float(in_zone.sum()) / max(1, int(active_w.sum()))
    distressed = (
        _welfare_weight(platform) > 0.0 and zone_share > WAGE_DISTRESS_ZONE_SHARE
    )
    if all(ref is None for ref in platform.reference_kpi):
        platform.reference_kpi = [(gmv_mean, sw_mean)] * 3
        if distressed:
            platform.directions[2] = 1.0
        return
    control = platform.cycle % 3
    platform.cycle += 1
    ref = platform.reference_kpi[control]
    j_now = _objective_j(platform, gmv_mean, sw_mean)
    j_ref = _objective_j(platform, ref[0], ref[1])
    rel = (j_now - j_ref) / max(abs(j_ref), 1e-9)
    if abs(rel) <= TIE_EPSILON:
        platform.directions[control] = -1.0
    elif rel < 0:
        platform.directions[control] = -platform.directions[control]
    if distressed:
        platform.directions[2] = 1.0
    rates = (
        cfg.commission_adjustment_rate,
        cfg.delivery_fee_adjustment_rate,
        cfg.wage_adjustment_rate,
    )
    spans = (
        cfg.max_commission - cfg.min_commission,
        cfg.max_delivery_fee - cfg.min_delivery_fee,
        cfg.max_wage - cfg.min_wage,
    )
    step = platform.directions[control] * rates[control] * spans[control]
    values = {
        "commission": platform.controls.commission,
        "delivery_fee": platform.controls.delivery_fee,
        "wage": platform.controls.wage,
    }
    values[_CONTROL_ORDER[control]] += step
    platform.controls = env.bounds.clamp(Controls(**values))
    platform.reference_kpi[control] = (gmv_mean, sw_mean)


def update_and_record(env: Environment, gmv: float, sw: float) -> PeriodMetrics:
    """Apply cumulative-utility bookkeeping, subsidies, and exits; emit metrics."""
    cfg = env.config
    controls = env.period_controls
    participating_r = env.r_active.copy()
    participating_w = env.w_active.copy()
    env.r_cumulative[participating_r] += env.r_period_utility[participating_r]
    env.c_cumulative += env.c_period_utility
    env.w_cumulative[participating_w] += env.w_period_utility[participating_w]

    # emergency subsidies defer exit for agents inside the transition zone
    r_zone = (
        participating_r
        & (env.r_cumulative > cfg.restaurant_exit_threshold)
        & (env.r_cumulative <= cfg.restaurant_transition_zone)
    )
    r_subsidy = cfg.emergency_subsidy_rate * env.r_fixed_cost[r_zone]
    env.r_cumulative[r_zone] += r_subsidy
    w_zone = (
        participating_w
        & (env.w_cumulative > cfg.worker_exit_threshold)
        & (env.w_cumulative <= cfg.worker_transition_zone)
    )
    w_subsidy = cfg.emergency_subsidy_rate * controls.wage * np.ones(int(w_zone.sum()))
    env.w_cumulative[w_zone] += w_subsidy
    subsidies = float(r_subsidy.sum() + w_subsidy.sum())
    env.platform.subsidy_paid += subsidies

    r_exit = participating_r & (env.r_cumulative <= cfg.restaurant_exit_threshold)
    w_exit = participating_w & (env.w_cumulative <= cfg.worker_exit_threshold)
    env.r_active[r_exit] = False
    env.w_active[w_exit] = False

    alpha = controls.commission
    serving = int((env.r_period_revenue > 0).sum())
    delivering = int((env.w_period_orders > 0).sum())
    rest_sat, cons_sat, work_sat = env.period_satisfaction
    return PeriodMetrics(
        gmv=gmv,
        sw=sw,
        reputation=env.platform.reputation,
        active_restaurants=int(env.r_active.sum()),
        active_workers=int(env.w_active.sum()),
        avg_restaurant_utility=(
            float(env.r_period_utility[participating_r].mean())
            if participating_r.any()
            else 0.0
        ),
        avg_consumer_utility=(
            float(env.c_period_utility.mean()) if env.n_consumers else 0.0
        ),
        avg_worker_utility=(
            float(env.w_period_utility[participating_w].mean())
            if participating_w.any()
            else 0.0
        ),
        restaurant_satisfaction=rest_sat,
        worker_satisfaction=work_sat,
        consumer_satisfaction=cons_sat,
        commission=alpha,
        delivery_fee=controls.delivery_fee,
        wage=controls.wage,
        orders=int(env.order_prices.size),
        late_orders=int(env.late_orders),
        on_time_rate=float(env.on_time_rate),
        commission_revenue=alpha * gmv,
        restaurant_net_revenue=float(((1.0 - alpha) * env.r_period_revenue).sum()),
        gross_basket_value=gmv,
        subsidies_paid=subsidies,
        serving_restaurants=serving,
        delivering_workers=delivering,
        entries_restaurants=int(env.entries_restaurants),
        exits_restaurants=int(r_exit.sum()),
        entries_workers=int(env.entries_workers),
        exits_workers=int(w_exit.sum()),
    )


def run_period(env: Environment) -> PeriodMetrics:
    env.period += 1
    update_market_and_add(env)
    env.period_controls = env.platform.controls
    update_rest_prices(env)
    gmv = consume_order(env)
    if gmv > 0:
        worker_deliver(env, gmv)
    else:
        env.w_period_utility = np.zeros(env.n_workers)
        env.w_period_orders = np.zeros(env.n_workers, dtype=np.int64)
        env.w_period_utility[env.w_active] = (
            -env.w_gamma[env.w_active] * SLOT_WAIT_MINUTES * MAX_CHARGED_SLOTS
        )
        env.delivered_orders = 0
        env.late_orders = 0
        env.last_period_orders = 0
    sw = calc_sw(env)
    update_reputation(env, sw, gmv)
    env.platform.gmv_history.append(gmv)
    env.platform.sw_history.append(sw)
    env.platform.on_time_history.append(env.on_time_rate)
    if env.period % env.config.strategy_update_interval == 0:
        update_strat(env, gmv, sw)
    metrics = update_and_record(env, gmv, sw)
    # restaurant revenue trend memory for the next pricing pass
    env.r_prev_revenue = env.r_last_revenue
    env.r_last_revenue = env.r_period_revenue.copy()
    return metrics


def simulate_run(
    config: SimConfig, seed: int, run_index: int, periods: int
) -> RunResult:
    env = init_env(config, derive_streams(seed, run_index))
    metrics = [run_period(env) for _ in range(periods)]
    return RunResult(
        run_index=run_index,
        strategy=config.platform_strategy,
        seed=seed,
        metrics=metrics,
    )


def _simulate_star(args: tuple[SimConfig, int, int, int]) -> RunResult:
    return simulate_run(*args)


def run_simulation(
    config: SimConfig,
    seed: int,
    runs: int | None = None,
    periods: int | None = None,
    jobs: int = 1,
) -> list[RunResult]:
    """Execute independent runs; results are ordered by run index and identical
    regardless of ``jobs`` because every run derives its own streams."""
    runs = config.default_runs if runs is None else runs
    periods = config.n_periods if periods is None else periods
    tasks = [(config, seed, r, periods) for r in range(runs)]
    if jobs > 1 and runs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_simulate_star, tasks))
    return [simulate_run(*t) for t in tasks]
