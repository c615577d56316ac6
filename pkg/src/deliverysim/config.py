"""Shared domain types, configuration schema, validation, and seeded stream derivation.

The simulation is governed by a flat key-value configuration whose keys are the
exact appendix spellings (environment keys lower-case, parameter keys upper-case,
ranges as two-element arrays). ``validate_config`` fills missing keys with the
canonical defaults, rejects unknown keys, and reports every violated invariant
at once.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, replace
from typing import Any, Iterable, Mapping

import numpy as np

STRATEGIES = ("GMV", "SW", "HYBRID")

#: Stream labels used by the simulation subsystems. ``derive_stream`` accepts
#: any label; these are the ones the engine draws from.
STREAM_LABELS = ("market", "agents", "choice", "delivery")


class ConfigError(ValueError):
    """Raised when a raw configuration document fails validation.

    ``problems`` holds one message per violated invariant or unknown key, so a
    caller sees every defect in one pass instead of fixing them one at a time.
    """

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


@dataclass(frozen=True)
class StaticParams:
    """Parameters of the one-period market model.

    ``beta_time`` is the consumer's per-minute time disutility (the beta of the
    consumer utility equation) and is deliberately distinct from any discount
    factor; the dynamic module carries its own ``discount`` field.
    """

    theta: float  # baseline demand (orders)
    eta: float  # price sensitivity (orders per currency unit)
    delta: float  # time sensitivity (orders per minute)
    beta_time: float  # consumer time disutility (currency per minute)
    gamma: float  # worker time-cost factor (currency per minute)
    v: float  # consumer intrinsic valuation (currency)
    fixed_cost: float  # restaurant fixed cost (currency per period)
    delivery_time: float  # minutes per order

    def __post_init__(self) -> None:
        problems = []
        if not self.theta > 0:
            problems.append(f"theta must be > 0, got {self.theta}")
        if not self.eta > 0:
            problems.append(f"eta must be > 0, got {self.eta}")
        if self.delta < 0:
            problems.append(f"delta must be >= 0, got {self.delta}")
        if self.beta_time < 0:
            problems.append(f"beta_time must be >= 0, got {self.beta_time}")
        if self.gamma < 0:
            problems.append(f"gamma must be >= 0, got {self.gamma}")
        if self.fixed_cost < 0:
            problems.append(f"fixed_cost must be >= 0, got {self.fixed_cost}")
        if self.delivery_time < 0:
            problems.append(f"delivery_time must be >= 0, got {self.delivery_time}")
        if problems:
            raise ConfigError(problems)


@dataclass(frozen=True)
class Controls:
    """The platform's decision triple: commission rate, delivery fee, per-order wage."""

    commission: float
    delivery_fee: float
    wage: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.commission < 1.0:
            raise ConfigError(
                [f"commission must satisfy 0 <= alpha < 1, got {self.commission}"]
            )

    def as_array(self) -> np.ndarray:
        return np.array([self.commission, self.delivery_fee, self.wage], dtype=float)


@dataclass(frozen=True)
class ControlBounds:
    """Box bounds for the control triple."""

    commission: tuple[float, float]
    delivery_fee: tuple[float, float]
    wage: tuple[float, float]

    def __post_init__(self) -> None:
        problems = []
        for name, (lo, hi) in (
            ("commission", self.commission),
            ("delivery_fee", self.delivery_fee),
            ("wage", self.wage),
        ):
            if lo > hi:
                problems.append(f"{name} bounds must satisfy lo <= hi, got ({lo}, {hi})")
        if not 0.0 <= self.commission[0] and self.commission[1] < 1.0:
            problems.append(
                f"commission bounds must lie in [0, 1), got {self.commission}"
            )
        if problems:
            raise ConfigError(problems)

    def midpoint(self) -> Controls:
        return Controls(
            commission=0.5 * (self.commission[0] + self.commission[1]),
            delivery_fee=0.5 * (self.delivery_fee[0] + self.delivery_fee[1]),
            wage=0.5 * (self.wage[0] + self.wage[1]),
        )

    def clamp(self, c: Controls) -> Controls:
        return Controls(
            commission=min(max(c.commission, self.commission[0]), self.commission[1]),
            delivery_fee=min(max(c.delivery_fee, self.delivery_fee[0]), self.delivery_fee[1]),
            wage=min(max(c.wage, self.wage[0]), self.wage[1]),
        )

    def contains(self, c: Controls, slack: float = 1e-12) -> bool:
        return (
            self.commission[0] - slack <= c.commission <= self.commission[1] + slack
            and self.delivery_fee[0] - slack <= c.delivery_fee <= self.delivery_fee[1] + slack
            and self.wage[0] - slack <= c.wage <= self.wage[1] + slack
        )


@dataclass(frozen=True)
class SimConfig:
    """Validated simulation configuration mirroring the canonical appendix table.

    Immutable after validation; safe to share across worker processes.
    """

    # overall environment
    n_restaurants: int = 100
    n_consumers: int = 1000
    n_workers: int = 150
    n_periods: int = 200
    strategy_update_interval: int = 2
    platform_strategy: str = "HYBRID"
    hybrid_lambda: float = 0.5
    default_runs: int = 5
    # market dynamic ranges
    market_growth_range: tuple[float, float] = (0.98, 1.02)
    competition_intensity_range: tuple[float, float] = (0.8, 1.2)
    economic_shock_range: tuple[float, float] = (0.90, 1.10)
    seasonal_factor_range: tuple[float, float] = (0.9, 1.1)
    network_effect_range: tuple[float, float] = (0.95, 1.05)
    # platform strategy adjustment
    commission_adjustment_rate: float = 0.03
    delivery_fee_adjustment_rate: float = 0.03
    wage_adjustment_rate: float = 0.03
    min_commission: float = 0.05
    max_commission: float = 0.25
    min_delivery_fee: float = 2.0
    max_delivery_fee: float = 12.0
    min_wage: float = 3.0
    max_wage: float = 15.0
    # restaurant attributes
    menu_size_range: tuple[int, int] = (4, 8)
    price_range: tuple[float, float] = (10.0, 20.0)
    fixed_cost_range: tuple[float, float] = (100.0, 200.0)
    quality_range: tuple[float, float] = (0.7, 1.0)
    reputation_range: tuple[float, float] = (0.5, 0.7)
    price_min: float = 8.0
    price_max: float = 25.0
    revenue_price_adjustment_factor: float = 0.05
    price_gap_adjustment_factor: float = 0.1
    # consumer attributes
    consumer_budget_range: tuple[float, float] = (40.0, 100.0)
    consumer_value_range: tuple[float, float] = (50.0, 120.0)
    price_sensitivity_range: tuple[float, float] = (0.3, 0.7)
    time_sensitivity_range: tuple[float, float] = (0.2, 0.5)
    quality_sensitivity_range: tuple[float, float] = (0.4, 0.8)
    platform_loyalty_range: tuple[float, float] = (0.4, 0.8)
    region_options: tuple[str, ...] = ("North", "South", "East", "West")
    taste_preference_range: tuple[float, float] = (0.0, 1.0)
    # delivery worker attributes
    time_cost_factor_range: tuple[float, float] = (0.6, 1.0)
    skill_level_range: tuple[float, float] = (0.7, 1.0)
    experience_range: tuple[float, float] = (0.1, 0.5)
    satisfaction_range: tuple[float, float] = (0.5, 0.8)
    # exit mechanisms and subsidies
    restaurant_exit_threshold: float = -300.0
    restaurant_transition_zone: float = -200.0
    worker_exit_threshold: float = -50.0
    worker_transition_zone: float = -20.0
    emergency_subsidy_rate: float = 0.10

    def control_bounds(self) -> ControlBounds:
        return ControlBounds(
            commission=(self.min_commission, self.max_commission),
            delivery_fee=(self.min_delivery_fee, self.max_delivery_fee),
            wage=(self.min_wage, self.max_wage),
        )


# File key -> SimConfig field. Keys are spelled exactly as the canonical
# appendix table writes them (environment keys lower-case, the rest upper-case).
_KEY_TO_FIELD: dict[str, str] = {
    "n_restaurants": "n_restaurants",
    "n_consumers": "n_consumers",
    "n_workers": "n_workers",
    "n_periods": "n_periods",
    "strategy_update_interval": "strategy_update_interval",
    "platform_strategy": "platform_strategy",
    "HYBRID_LAMBDA": "hybrid_lambda",
    "DEFAULT_RUNS": "default_runs",
    "MARKET_GROWTH_RANGE": "market_growth_range",
    "COMPETITION_INTENSITY_RANGE": "competition_intensity_range",
    "ECONOMIC_SHOCK_RANGE": "economic_shock_range",
    "SEASONAL_FACTOR_RANGE": "seasonal_factor_range",
    "NETWORK_EFFECT_RANGE": "network_effect_range",
    "COMMISSION_ADJUSTMENT_RATE": "commission_adjustment_rate",
    "DELIVERY_FEE_ADJUSTMENT_RATE": "delivery_fee_adjustment_rate",
    "WAGE_ADJUSTMENT_RATE": "wage_adjustment_rate",
    "MIN_COMMISSION": "min_commission",
    "MAX_COMMISSION": "max_commission",
    "MIN_DELIVERY_FEE": "min_delivery_fee",
    "MAX_DELIVERY_FEE": "max_delivery_fee",
    "MIN_WAGE": "min_wage",
    "MAX_WAGE": "max_wage",
    "MENU_SIZE_RANGE": "menu_size_range",
    "PRICE_RANGE": "price_range",
    "FIXED_COST_RANGE": "fixed_cost_range",
    "QUALITY_RANGE": "quality_range",
    "REPUTATION_RANGE": "reputation_range",
    "PRICE_MIN": "price_min",
    "PRICE_MAX": "price_max",
    "REVENUE_PRICE_ADJUSTMENT_FACTOR": "revenue_price_adjustment_factor",
    "PRICE_GAP_ADJUSTMENT_FACTOR": "price_gap_adjustment_factor",
    "CONSUMER_BUDGET_RANGE": "consumer_budget_range",
    "CONSUMER_VALUE_RANGE": "consumer_value_range",
    "PRICE_SENSITIVITY_RANGE": "price_sensitivity_range",
    "TIME_SENSITIVITY_RANGE": "time_sensitivity_range",
    "QUALITY_SENSITIVITY_RANGE": "quality_sensitivity_range",
    "PLATFORM_LOYALTY_RANGE": "platform_loyalty_range",
    "REGION_OPTIONS": "region_options",
    "TASTE_PREFERENCE_RANGE": "taste_preference_range",
    "TIME_COST_FACTOR_RANGE": "time_cost_factor_range",
    "SKILL_LEVEL_RANGE": "skill_level_range",
    "EXPERIENCE_RANGE": "experience_range",
    "SATISFACTION_RANGE": "satisfaction_range",
    "RESTAURANT_EXIT_THRESHOLD": "restaurant_exit_threshold",
    "RESTAURANT_TRANSITION_ZONE": "restaurant_transition_zone",
    "WORKER_EXIT_THRESHOLD": "worker_exit_threshold",
    "WORKER_TRANSITION_ZONE": "worker_transition_zone",
    "EMERGENCY_SUBSIDY_RATE": "emergency_subsidy_rate",
}

_FIELD_TO_KEY = {v: k for k, v in _KEY_TO_FIELD.items()}

_INT_FIELDS = {
    "n_restaurants",
    "n_consumers",
    "n_workers",
    "n_periods",
    "strategy_update_interval",
    "default_runs",
}

_RANGE_FIELDS = {
    "market_growth_range",
    "competition_intensity_range",
    "economic_shock_range",
    "seasonal_factor_range",
    "network_effect_range",
    "menu_size_range",
    "price_range",
    "fixed_cost_range",
    "quality_range",
    "reputation_range",
    "consumer_budget_range",
    "consumer_value_range",
    "price_sensitivity_range",
    "time_sensitivity_range",
    "quality_sensitivity_range",
    "platform_loyalty_range",
    "taste_preference_range",
    "time_cost_factor_range",
    "skill_level_range",
    "experience_range",
    "satisfaction_range",
}

#: Named experiment presets. The bare defaults follow the canonical appendix
#: table; the paper-experiment profile matches the reported experiment scale
#: (500 periods, 50 independent runs).
PROFILES: dict[str, dict[str, int]] = {
    "paper-experiment": {"n_periods": 500, "DEFAULT_RUNS": 50},
}


def _coerce(key: str, fname: str, value: Any, problems: list[str]) -> Any:
    if fname in _RANGE_FIELDS:
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            problems.append(f"{key}: expected a two-element [lo, hi] array, got {value!r}")
            return None
        lo, hi = value
        if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in (lo, hi)):
            problems.append(f"{key}: range endpoints must be numeric, got {value!r}")
            return None
        if fname == "menu_size_range":
            if lo != int(lo) or hi != int(hi):
                problems.append(f"{key}: menu sizes must be integers, got {value!r}")
                return None
            return (int(lo), int(hi))
        return (float(lo), float(hi))
    if fname == "region_options":
        if not isinstance(value, (list, tuple)) or not value or not all(
            isinstance(x, str) for x in value
        ):
            problems.append(f"{key}: expected a non-empty array of region names, got {value!r}")
            return None
        return tuple(value)
    if fname == "platform_strategy":
        if value not in STRATEGIES:
            problems.append(
                f"{key}: must be one of {{GMV, SW, HYBRID}}, got {value!r}"
            )
            return None
        return value
    if fname in _INT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            problems.append(f"{key}: expected an integer, got {value!r}")
            return None
        return int(value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append(f"{key}: expected a number, got {value!r}")
        return None
    return float(value)


def _check_invariants(cfg: SimConfig, problems: list[str]) -> None:
    key = _FIELD_TO_KEY
    for fname in _RANGE_FIELDS:
        lo, hi = getattr(cfg, fname)
        if lo > hi:
            problems.append(f"{key[fname]}: range must satisfy lo <= hi, got ({lo}, {hi})")
    for lo_f, hi_f in (
        ("min_commission", "max_commission"),
        ("min_delivery_fee", "max_delivery_fee"),
        ("min_wage", "max_wage"),
    ):
        if getattr(cfg, lo_f) > getattr(cfg, hi_f):
            problems.append(
                f"{key[lo_f]}, {key[hi_f]}: bound ordering violated "
                f"({getattr(cfg, lo_f)} > {getattr(cfg, hi_f)})"
            )
    if not (0.0 <= cfg.min_commission and cfg.max_commission < 1.0):
        problems.append(
            f"{key['min_commission']}, {key['max_commission']}: "
            "commission bounds must lie in [0, 1)"
        )
    if not cfg.restaurant_exit_threshold < cfg.restaurant_transition_zone < 0:
        problems.append(
            f"{key['restaurant_exit_threshold']}, {key['restaurant_transition_zone']}: "
            "must satisfy EXIT < TRANSITION < 0, got "
            f"({cfg.restaurant_exit_threshold}, {cfg.restaurant_transition_zone})"
        )
    if not cfg.worker_exit_threshold < cfg.worker_transition_zone < 0:
        problems.append(
            f"{key['worker_exit_threshold']}, {key['worker_transition_zone']}: "
            "must satisfy EXIT < TRANSITION < 0, got "
            f"({cfg.worker_exit_threshold}, {cfg.worker_transition_zone})"
        )
    if not 0.0 <= cfg.hybrid_lambda <= 1.0:
        problems.append(f"{key['hybrid_lambda']}: must lie in [0, 1], got {cfg.hybrid_lambda}")
    for fname in ("n_restaurants", "n_consumers", "n_workers"):
        if getattr(cfg, fname) < 0:
            problems.append(f"{key[fname]}: must be >= 0, got {getattr(cfg, fname)}")
    for fname in ("n_periods", "strategy_update_interval", "default_runs"):
        if getattr(cfg, fname) < 1:
            problems.append(f"{key[fname]}: must be >= 1, got {getattr(cfg, fname)}")
    if cfg.menu_size_range[0] < 1:
        problems.append(f"{key['menu_size_range']}: menu size must be >= 1")
    if cfg.price_min > cfg.price_range[0] or cfg.price_range[1] > cfg.price_max:
        problems.append(
            f"{key['price_range']}: initial prices must lie within "
            f"[{key['price_min']}, {key['price_max']}] = [{cfg.price_min}, {cfg.price_max}]"
        )
    for fname in (
        "commission_adjustment_rate",
        "delivery_fee_adjustment_rate",
        "wage_adjustment_rate",
        "emergency_subsidy_rate",
    ):
        if getattr(cfg, fname) < 0:
            problems.append(f"{key[fname]}: must be >= 0, got {getattr(cfg, fname)}")


def validate_config(raw: Mapping[str, Any] | None = None) -> SimConfig:
    """Build a SimConfig from a raw key-value document.

    Missing keys take the canonical defaults. Unknown keys are an error, and
    every violated invariant is reported (with its key name), not just the
    first one.
    """
    raw = dict(raw or {})
    problems: list[str] = []
    overrides: dict[str, Any] = {}
    for k in sorted(raw):
        if k not in _KEY_TO_FIELD:
            problems.append(f"{k}: unknown configuration key")
    for k, v in raw.items():
        fname = _KEY_TO_FIELD.get(k)
        if fname is None:
            continue
        coerced = _coerce(k, fname, v, problems)
        if coerced is not None:
            overrides[fname] = coerced
    cfg = SimConfig(**overrides)
    _check_invariants(cfg, problems)
    if problems:
        raise ConfigError(problems)
    return cfg


def serialize_config(cfg: SimConfig) -> dict[str, Any]:
    """Render a SimConfig back into the flat key-value document form.

    ``validate_config(serialize_config(cfg))`` reproduces an equal SimConfig.
    """
    doc: dict[str, Any] = {}
    for f in fields(SimConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = list(value)
        doc[_FIELD_TO_KEY[f.name]] = value
    return doc


def apply_profile(cfg: SimConfig, profile: str) -> SimConfig:
    """Apply a named preset on top of a validated config."""
    if profile not in PROFILES:
        raise ConfigError(
            [f"unknown profile {profile!r}; available: {sorted(PROFILES)}"]
        )
    updates = {_KEY_TO_FIELD[k]: v for k, v in PROFILES[profile].items()}
    return replace(cfg, **updates)


@dataclass
class RandomStream:
    """A single-owner deterministic random stream.

    Identical (seed, run_index, stream_id) always reproduces the same draw
    sequence; distinct labels or run indices never share generator state.
    Parallelism derives independent streams instead of sharing one.
    """

    seed: int
    run_index: int
    stream_id: str
    generator: np.random.Generator = field(repr=False)


def derive_stream(seed: int, run_index: int, stream_id: str) -> RandomStream:
    """Derive an independent, reproducible stream for one (run, subsystem) pair.

    The label is folded into the spawn key through a stable hash, so any label
    is valid and the mapping is identical across platforms and processes.
    """
    digest = hashlib.sha256(stream_id.encode("utf-8")).digest()
    words = tuple(int.from_bytes(digest[i : i + 4], "big") for i in (0, 4))
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(run_index), *words))
    return RandomStream(
        seed=int(seed),
        run_index=int(run_index),
        stream_id=stream_id,
        generator=np.random.Generator(np.random.PCG64(ss)),
    )


def derive_streams(
    seed: int, run_index: int, labels: Iterable[str] = STREAM_LABELS
) -> dict[str, RandomStream]:
    return {label: derive_stream(seed, run_index, label) for label in labels}
