"""Two-sided food-delivery platform economics: closed-form static equilibrium,
discounted dynamic programming over platform state, and a multi-agent strategy
simulation with reporting."""

from .abm import (
    ConsumerAgent,
    Environment,
    PeriodMetrics,
    PlatformLedger,
    RestaurantAgent,
    RunResult,
    WorkerAgent,
    init_env,
    run_simulation,
    simulate_run,
)
from .config import (
    ConfigError,
    ControlBounds,
    Controls,
    RandomStream,
    SimConfig,
    StaticParams,
    apply_profile,
    derive_stream,
    derive_streams,
    serialize_config,
    validate_config,
)
from .dp import (
    DpConfig,
    DpConvergenceError,
    DpModel,
    MarketState,
    PolicyGrid,
    TransitionParams,
    ValueFunction,
    bellman_backup,
    canonical_instance,
    default_transition_params,
    stage_payoffs,
    transition,
    value_iteration,
)
from .equilibrium import (
    LemmaReport,
    StaticOutcome,
    SurplusReport,
    check_lemma_orderings,
    choke_price,
    consumer_surplus,
    consumer_utility,
    demand,
    optimal_price,
    restaurant_utility,
    solve_static,
    static_outcome,
    surplus_report,
    worker_utility,
)
from .report import AggregateReport, aggregate_runs, correlation_matrix, export

__version__ = "0.1.0"
