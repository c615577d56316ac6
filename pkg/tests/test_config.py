"""Configuration schema, validation, and stream-derivation tests."""

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deliverysim.config import (
    PROFILES,
    ConfigError,
    ControlBounds,
    Controls,
    StaticParams,
    apply_profile,
    derive_stream,
    derive_streams,
    serialize_config,
    validate_config,
)

# The canonical defaults, spelled out literally so a regression in any single
# value is caught by name.
CANONICAL_DEFAULTS = {
    "n_restaurants": 100,
    "n_consumers": 1000,
    "n_workers": 150,
    "n_periods": 200,
    "strategy_update_interval": 2,
    "platform_strategy": "HYBRID",
    "HYBRID_LAMBDA": 0.5,
    "DEFAULT_RUNS": 5,
    "MARKET_GROWTH_RANGE": [0.98, 1.02],
    "COMPETITION_INTENSITY_RANGE": [0.8, 1.2],
    "ECONOMIC_SHOCK_RANGE": [0.90, 1.10],
    "SEASONAL_FACTOR_RANGE": [0.9, 1.1],
    "NETWORK_EFFECT_RANGE": [0.95, 1.05],
    "COMMISSION_ADJUSTMENT_RATE": 0.03,
    "DELIVERY_FEE_ADJUSTMENT_RATE": 0.03,
    "WAGE_ADJUSTMENT_RATE": 0.03,
    "MIN_COMMISSION": 0.05,
    "MAX_COMMISSION": 0.25,
    "MIN_DELIVERY_FEE": 2.0,
    "MAX_DELIVERY_FEE": 12.0,
    "MIN_WAGE": 3.0,
    "MAX_WAGE": 15.0,
    "MENU_SIZE_RANGE": [4, 8],
    "PRICE_RANGE": [10.0, 20.0],
    "FIXED_COST_RANGE": [100.0, 200.0],
    "QUALITY_RANGE": [0.7, 1.0],
    "REPUTATION_RANGE": [0.5, 0.7],
    "PRICE_MIN": 8.0,
    "PRICE_MAX": 25.0,
    "REVENUE_PRICE_ADJUSTMENT_FACTOR": 0.05,
    "PRICE_GAP_ADJUSTMENT_FACTOR": 0.1,
    "CONSUMER_BUDGET_RANGE": [40.0, 100.0],
    "CONSUMER_VALUE_RANGE": [50.0, 120.0],
    "PRICE_SENSITIVITY_RANGE": [0.3, 0.7],
    "TIME_SENSITIVITY_RANGE": [0.2, 0.5],
    "QUALITY_SENSITIVITY_RANGE": [0.4, 0.8],
    "PLATFORM_LOYALTY_RANGE": [0.4, 0.8],
    "REGION_OPTIONS": ["North", "South", "East", "West"],
    "TASTE_PREFERENCE_RANGE": [0.0, 1.0],
    "TIME_COST_FACTOR_RANGE": [0.6, 1.0],
    "SKILL_LEVEL_RANGE": [0.7, 1.0],
    "EXPERIENCE_RANGE": [0.1, 0.5],
    "SATISFACTION_RANGE": [0.5, 0.8],
    "RESTAURANT_EXIT_THRESHOLD": -300.0,
    "RESTAURANT_TRANSITION_ZONE": -200.0,
    "WORKER_EXIT_THRESHOLD": -50.0,
    "WORKER_TRANSITION_ZONE": -20.0,
    "EMERGENCY_SUBSIDY_RATE": 0.10,
}


def test_empty_document_uses_defaults():
    cfg = validate_config({})
    assert cfg.n_restaurants == 100
    assert cfg.n_consumers == 1000
    assert cfg.n_workers == 150
    assert cfg.hybrid_lambda == 0.5


def test_defaults_match_canonical_table_exactly():
    doc = serialize_config(validate_config({}))
    assert doc == CANONICAL_DEFAULTS


def test_full_canonical_document_round_trips():
    cfg = validate_config(CANONICAL_DEFAULTS)
    assert cfg == validate_config({})


def test_bound_ordering_violation_names_both_keys():
    with pytest.raises(ConfigError) as err:
        validate_config({"MIN_COMMISSION": 0.3, "MAX_COMMISSION": 0.25})
    message = str(err.value)
    assert "MIN_COMMISSION" in message
    assert "MAX_COMMISSION" in message


def test_single_override_leaves_everything_else():
    cfg = validate_config({"platform_strategy": "SW"})
    default = validate_config({})
    assert cfg.platform_strategy == "SW"
    assert dataclasses.replace(cfg, platform_strategy="HYBRID") == default


def test_unknown_key_is_an_error():
    with pytest.raises(ConfigError) as err:
        validate_config({"MIN_COMISSION": 0.1})
    assert "MIN_COMISSION" in str(err.value)


def test_all_violations_reported_not_just_first():
    with pytest.raises(ConfigError) as err:
        validate_config(
            {
                "MIN_WAGE": 20.0,  # above MAX_WAGE
                "HYBRID_LAMBDA": 1.5,
                "BOGUS_KEY": 1,
            }
        )
    message = str(err.value)
    assert "MIN_WAGE" in message
    assert "HYBRID_LAMBDA" in message
    assert "BOGUS_KEY" in message


def test_exit_threshold_ordering_enforced():
    with pytest.raises(ConfigError):
        validate_config({"RESTAURANT_EXIT_THRESHOLD": -100.0})  # above the zone
    with pytest.raises(ConfigError):
        validate_config({"WORKER_TRANSITION_ZONE": 5.0})  # zones must be negative


def test_bad_strategy_rejected():
    with pytest.raises(ConfigError) as err:
        validate_config({"platform_strategy": "PROFIT"})
    assert "GMV" in str(err.value)


def test_range_shape_validated():
    with pytest.raises(ConfigError):
        validate_config({"PRICE_RANGE": [10.0]})
    with pytest.raises(ConfigError):
        validate_config({"PRICE_RANGE": [20.0, 10.0]})


def test_serialize_round_trip_equality():
    cfg = validate_config({"n_periods": 500, "MAX_WAGE": 18.0})
    assert validate_config(serialize_config(cfg)) == cfg


@settings(max_examples=50, deadline=None)
@given(
    n_restaurants=st.integers(min_value=0, max_value=500),
    lam=st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
    wage_lo=st.floats(min_value=0.5, max_value=8.0, allow_nan=False),
    wage_span=st.floats(min_value=0.0, max_value=10.0, allow_nan=False),
)
def test_round_trip_property(n_restaurants, lam, wage_lo, wage_span):
    cfg = validate_config(
        {
            "n_restaurants": n_restaurants,
            "HYBRID_LAMBDA": lam,
            "MIN_WAGE": wage_lo,
            "MAX_WAGE": wage_lo + wage_span,
        }
    )
    assert validate_config(serialize_config(cfg)) == cfg


def test_paper_experiment_profile():
    cfg = apply_profile(validate_config({}), "paper-experiment")
    assert cfg.n_periods == 500
    assert cfg.default_runs == 50
    assert "paper-experiment" in PROFILES


def test_unknown_profile_rejected():
    with pytest.raises(ConfigError):
        apply_profile(validate_config({}), "nope")


# -- domain types ------------------------------------------------------------


def test_static_params_validation():
    with pytest.raises(ConfigError) as err:
        StaticParams(
            theta=0.0, eta=-1.0, delta=-0.1, beta_time=-1.0,
            gamma=-1.0, v=10.0, fixed_cost=-5.0, delivery_time=-2.0,
        )
    message = str(err.value)
    for name in ("theta", "eta", "delta", "beta_time", "gamma", "fixed_cost", "delivery_time"):
        assert name in message


def test_controls_commission_domain():
    Controls(commission=0.0, delivery_fee=1.0, wage=5.0)
    with pytest.raises(ConfigError):
        Controls(commission=1.0, delivery_fee=1.0, wage=5.0)
    with pytest.raises(ConfigError):
        Controls(commission=-0.1, delivery_fee=1.0, wage=5.0)


def test_control_bounds_helpers():
    bounds = ControlBounds(commission=(0.05, 0.25), delivery_fee=(2.0, 12.0), wage=(3.0, 15.0))
    mid = bounds.midpoint()
    assert (mid.commission, mid.delivery_fee, mid.wage) == (0.15, 7.0, 9.0)
    clamped = bounds.clamp(Controls(commission=0.5, delivery_fee=0.0, wage=99.0))
    assert (clamped.commission, clamped.delivery_fee, clamped.wage) == (0.25, 2.0, 15.0)
    assert bounds.contains(mid)
    with pytest.raises(ConfigError):
        ControlBounds(commission=(0.3, 0.2), delivery_fee=(2.0, 12.0), wage=(3.0, 15.0))


# -- random streams ----------------------------------------------------------


def test_same_key_reproduces_stream():
    a = derive_stream(42, 0, "market").generator.uniform(size=1000)
    b = derive_stream(42, 0, "market").generator.uniform(size=1000)
    assert np.array_equal(a, b)


def test_distinct_run_indices_differ():
    a = derive_stream(42, 0, "market").generator.uniform(size=1000)
    b = derive_stream(42, 1, "market").generator.uniform(size=1000)
    assert (a != b).any()


def test_distinct_labels_differ():
    a = derive_stream(42, 0, "market").generator.uniform(size=1000)
    b = derive_stream(42, 0, "agents").generator.uniform(size=1000)
    assert (a != b).any()


def test_streams_do_not_share_state():
    streams = derive_streams(7, 3)
    before = streams["agents"].generator.uniform(size=10)
    # drawing a lot from one stream must not perturb another
    streams["market"].generator.uniform(size=100000)
    again = derive_streams(7, 3)
    again["agents"].generator.uniform(size=10)
    assert np.array_equal(before, derive_stream(7, 3, "agents").generator.uniform(size=10))


def test_stream_metadata():
    s = derive_stream(11, 2, "delivery")
    assert (s.seed, s.run_index, s.stream_id) == (11, 2, "delivery")
