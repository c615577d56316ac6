"""One-period market model: utilities, linear demand, closed-form pricing, surplus,
and a derivative-free platform optimizer over (commission, fee, wage).

All operations are pure and stateless. The restaurant's best response to the
platform's controls has the closed form A* = (theta - eta*D - delta*t) / (2*eta);
demand is clamped at zero above the choke price, and every derivative-based
diagnostic restricts itself to the interior region where the clamp is inactive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ControlBounds, Controls, RandomStream, StaticParams

OBJECTIVES = ("GMV", "SW")


class SolverError(RuntimeError):
    """Raised when the control-box refinement fails to settle within its round cap."""


@dataclass(frozen=True)
class StaticOutcome:
    """Equilibrium outcome of one instance at given controls."""

    price: float
    quantity: float
    restaurant_utility: float
    consumer_utility: float
    worker_utility: float
    gmv: float
    social_welfare: float


@dataclass(frozen=True)
class SurplusReport:
    consumer_surplus: float
    restaurant_surplus: float
    worker_surplus: float
    choke_price: float


@dataclass(frozen=True)
class LemmaReport:
    """Executable verdicts for the optimal-control orderings and SW dominance."""

    controls_gmv: Controls
    controls_sw: Controls
    sw_at_gmv: float
    sw_at_sw: float
    commission_ordering: bool  # alpha_SW <= alpha_GMV
    fee_ordering: bool  # D_SW >= D_GMV
    wage_ordering: bool  # p_SW >= p_GMV
    sw_dominance: bool  # SW_SW >= SW_GMV (up to solver tolerance)


def demand(price: float, controls: Controls, params: StaticParams) -> float:
    """Linear demand at an item price, clamped at zero above the choke price."""
    q = (
        params.theta
        - params.eta * (price + controls.delivery_fee)
        - params.delta * params.delivery_time
    )
    return max(0.0, q)


def optimal_price(controls: Controls, params: StaticParams) -> float:
    """Profit-maximizing item price given the delivery fee, clamped below at zero."""
    if params.eta <= 0:
        raise ValueError(f"eta must be > 0, got {params.eta}")
    a = (
        params.theta
        - params.eta * controls.delivery_fee
        - params.delta * params.delivery_time
    ) / (2.0 * params.eta)
    return max(0.0, a)


def choke_price(params: StaticParams) -> float:
    """Effective price at which demand reaches zero, clamped below at zero."""
    if params.eta <= 0:
        raise ValueError(f"eta must be > 0, got {params.eta}")
    return max(0.0, (params.theta - params.delta * params.delivery_time) / params.eta)


def restaurant_utility(
    price: float, quantity: float, controls: Controls, params: StaticParams
) -> float:
    """Net restaurant payoff: revenue share after commission, minus fixed cost."""
    return (1.0 - controls.commission) * price * quantity - params.fixed_cost


def consumer_utility(basket_cost: float, controls: Controls, params: StaticParams) -> float:
    """Consumer payoff: valuation minus time disutility minus out-of-pocket cost."""
    return (
        params.v
        - params.beta_time * params.delivery_time
        - (basket_cost + controls.delivery_fee)
    )


def worker_utility(
    orders_delivered: float, time_spent: float, controls: Controls, params: StaticParams
) -> float:
    """Worker payoff: wage income minus time cost."""
    return controls.wage * orders_delivered - params.gamma * time_spent


def consumer_surplus(effective_price: float, params: StaticParams) -> float:
    """Area under the demand curve above the paid price, up to the choke price.

    Closed form of the demand integral: (eta/2) * (P_max - P)^2 for P < P_max,
    zero otherwise.
    """
    p_max = choke_price(params)
    if effective_price >= p_max:
        return 0.0
    return 0.5 * params.eta * (p_max - effective_price) ** 2


def static_outcome(controls: Controls, params: StaticParams) -> StaticOutcome:
    """Evaluate the one-period equilibrium at given controls.

    Restaurants respond with the closed-form optimal price; all equilibrium
    demand is delivered (the worker's load is total demand, with time scaling
    linearly in orders).
    """
    price = optimal_price(controls, params)
    quantity = demand(price, controls, params)
    revenue = price * quantity
    u_s = restaurant_utility(price, quantity, controls, params)
    u_c = consumer_utility(revenue, controls, params)
    u_r = worker_utility(quantity, quantity * params.delivery_time, controls, params)
    return StaticOutcome(
        price=price,
        quantity=quantity,
        restaurant_utility=u_s,
        consumer_utility=u_c,
        worker_utility=u_r,
        gmv=revenue,
        social_welfare=u_s + u_c + u_r,
    )


def aggregate_outcome(controls: Controls, instances: list[StaticParams]) -> tuple[float, float]:
    """Aggregate (GMV, SW) over independent restaurant copies: sums of copies."""
    outs = [static_outcome(controls, p) for p in instances]
    return sum(o.gmv for o in outs), sum(o.social_welfare for o in outs)


def surplus_report(
    controls: Controls,
    params: StaticParams,
    orders: float | None = None,
    time_spent: float | None = None,
) -> SurplusReport:
    """Surplus measures at the restaurant's optimal price.

    By default the delivery workload follows the static closure (all demand is
    delivered, time scales linearly in orders); pass ``orders``/``time_spent``
    to report the worker surplus for an explicit workload instead.
    """
    price = optimal_price(controls, params)
    quantity = demand(price, controls, params)
    if orders is None:
        orders = quantity
    if time_spent is None:
        time_spent = orders * params.delivery_time
    cs = consumer_surplus(price + controls.delivery_fee, params)
    ps_s = restaurant_utility(price, quantity, controls, params)
    ps_r = worker_utility(orders, time_spent, controls, params)
    return SurplusReport(
        consumer_surplus=cs,
        restaurant_surplus=ps_s,
        worker_surplus=ps_r,
        choke_price=choke_price(params),
    )


# ---------------------------------------------------------------------------
# platform optimization over the control box
# ---------------------------------------------------------------------------


def _objective_grid(
    objective: str,
    params: StaticParams,
    alphas: np.ndarray,
    fees: np.ndarray,
    wages: np.ndarray,
) -> np.ndarray:
    """Objective values on the full (alpha, fee, wage) grid, vectorized.

    Returns an array of shape (len(alphas), len(fees), len(wages)).
    """
    a = alphas[:, None, None]
    d = fees[None, :, None]
    p = wages[None, None, :]
    price = np.maximum(
        0.0,
        (params.theta - params.eta * d - params.delta * params.delivery_time)
        / (2.0 * params.eta),
    )
    qty = np.maximum(
        0.0,
        params.theta - params.eta * (price + d) - params.delta * params.delivery_time,
    )
    revenue = price * qty
    if objective == "GMV":
        return np.broadcast_to(revenue, (len(alphas), len(fees), len(wages))).copy()
    u_s = (1.0 - a) * revenue - params.fixed_cost
    u_c = params.v - params.beta_time * params.delivery_time - (revenue + d)
    u_r = p * qty - params.gamma * qty * params.delivery_time
    return u_s + u_c + u_r


def solve_static(
    objective: str,
    params: StaticParams,
    bounds: ControlBounds,
    rounds: int = 3,
    points_per_axis: int = 21,
    shrink: float = 5.0,
    max_rounds: int = 12,
) -> Controls:
    """Maximize the platform objective over the control box.

    Grid refinement: scan a full ``points_per_axis``-cubed lattice, then shrink
    the box ``shrink``-fold around the incumbent and repeat. Ties break
    lexicographically by (commission, fee, wage) ascending, which np.argmax's
    first-maximum rule delivers on the C-ordered lattice. The incumbent is kept
    across rounds, so the objective value never regresses.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    if rounds > max_rounds:
        raise SolverError(
            f"refinement schedule exceeds the round cap ({rounds} > {max_rounds})"
        )
    box = (bounds.commission, bounds.delivery_fee, bounds.wage)
    best: tuple[float, tuple[float, float, float]] | None = None
    for _ in range(rounds):
        axes = [np.linspace(lo, hi, points_per_axis) for lo, hi in box]
        values = _objective_grid(objective, params, *axes)
        flat = int(np.argmax(values))
        i, j, k = np.unravel_index(flat, values.shape)
        cand_val = float(values[i, j, k])
        cand = (float(axes[0][i]), float(axes[1][j]), float(axes[2][k]))
        if best is None or cand_val > best[0] + 1e-15:
            best = (cand_val, cand)
        center = best[1]
        new_box = []
        for (lo, hi), c in zip(box, center):
            half = (hi - lo) / (2.0 * shrink)
            new_box.append((max(lo, c - half), min(hi, c + half)))
        box = tuple(new_box)
    assert best is not None
    return Controls(commission=best[1][0], delivery_fee=best[1][1], wage=best[1][2])


def evaluate_objective(objective: str, controls: Controls, params: StaticParams) -> float:
    out = static_outcome(controls, params)
    return out.gmv if objective == "GMV" else out.social_welfare


def check_lemma_orderings(
    params: StaticParams, bounds: ControlBounds, tol: float = 1e-6
) -> LemmaReport:
    """Solve both objectives and report the control orderings and SW dominance."""
    c_gmv = solve_static("GMV", params, bounds)
    c_sw = solve_static("SW", params, bounds)
    sw_at_gmv = evaluate_objective("SW", c_gmv, params)
    sw_at_sw = evaluate_objective("SW", c_sw, params)
    return LemmaReport(
        controls_gmv=c_gmv,
        controls_sw=c_sw,
        sw_at_gmv=sw_at_gmv,
        sw_at_sw=sw_at_sw,
        commission_ordering=c_sw.commission <= c_gmv.commission + tol,
        fee_ordering=c_sw.delivery_fee >= c_gmv.delivery_fee - tol,
        wage_ordering=c_sw.wage >= c_gmv.wage - tol,
        sw_dominance=sw_at_sw >= sw_at_gmv - tol,
    )


# ---------------------------------------------------------------------------
# finite-difference diagnostics
# ---------------------------------------------------------------------------


def price_foc_residual(controls: Controls, params: StaticParams, step: float = 1e-5) -> float:
    """Central finite difference of restaurant utility in the item price at A*.

    Meaningful only when A* is interior (strictly inside (0, choke - fee)).
    """
    a_star = optimal_price(controls, params)

    def u_s(a: float) -> float:
        return restaurant_utility(a, demand(a, controls, params), controls, params)

    return (u_s(a_star + step) - u_s(a_star - step)) / (2.0 * step)


def price_second_difference(
    controls: Controls, params: StaticParams, step: float = 0.05
) -> float:
    """Central second difference of restaurant utility in the item price at A*.

    For an interior optimum this recovers the curvature -(1-alpha)*2*eta; the
    payoff is exactly quadratic in the interior, so a wide step costs no
    truncation error while keeping rounding noise (which scales as 1/step^2)
    far below tolerance.
    """
    a_star = optimal_price(controls, params)

    def u_s(a: float) -> float:
        return restaurant_utility(a, demand(a, controls, params), controls, params)

    return (u_s(a_star + step) - 2.0 * u_s(a_star) + u_s(a_star - step)) / step**2


def objective_gradient(
    objective: str, controls: Controls, params: StaticParams, step: float = 1e-6
) -> tuple[float, float, float]:
    """Central-difference gradient of the platform objective in (alpha, D, p)."""

    def value(da: float = 0.0, dd: float = 0.0, dp: float = 0.0) -> float:
        c = Controls(
            commission=controls.commission + da,
            delivery_fee=controls.delivery_fee + dd,
            wage=controls.wage + dp,
        )
        return evaluate_objective(objective, c, params)

    g_alpha = (value(da=step) - value(da=-step)) / (2.0 * step)
    g_fee = (value(dd=step) - value(dd=-step)) / (2.0 * step)
    g_wage = (value(dp=step) - value(dp=-step)) / (2.0 * step)
    return g_alpha, g_fee, g_wage


# ---------------------------------------------------------------------------
# instance samplers for property and acceptance tests
# ---------------------------------------------------------------------------


def sample_instance(stream: RandomStream) -> StaticParams:
    """Random valid instance with interior demand at typical control levels."""
    rng = stream.generator
    theta = rng.uniform(40.0, 160.0)
    eta = rng.uniform(0.5, 4.0)
    delta = rng.uniform(0.0, 1.5)
    delivery_time = rng.uniform(5.0, 20.0)
    # keep the market un-choked: delta * t strictly below theta
    while delta * delivery_time >= 0.8 * theta:
        delta = rng.uniform(0.0, 1.5)
        delivery_time = rng.uniform(5.0, 20.0)
    return StaticParams(
        theta=theta,
        eta=eta,
        delta=delta,
        beta_time=rng.uniform(0.0, 1.0),
        gamma=rng.uniform(0.1, 3.0),
        v=rng.uniform(30.0, 120.0),
        fixed_cost=rng.uniform(0.0, 300.0),
        delivery_time=delivery_time,
    )


def sample_typical_instance(
    stream: RandomStream, bounds: ControlBounds
) -> StaticParams:
    """Instance family on which the control orderings are asserted.

    Drawn so that worker participation binds (per-order time cost comparable to
    the wage midpoint) and restaurant margins are thin (fixed cost near the
    post-commission revenue at the box midpoint).
    """
    rng = stream.generator
    mid = bounds.midpoint()
    theta = rng.uniform(60.0, 140.0)
    eta = rng.uniform(1.0, 3.0)
    delta = rng.uniform(0.1, 1.0)
    delivery_time = rng.uniform(6.0, 15.0)
    while delta * delivery_time >= 0.6 * theta:
        delta = rng.uniform(0.1, 1.0)
        delivery_time = rng.uniform(6.0, 15.0)
    # worker time cost per order within +-50% of the midpoint wage
    gamma = rng.uniform(0.5, 1.5) * mid.wage / delivery_time
    probe = StaticParams(
        theta=theta,
        eta=eta,
        delta=delta,
        beta_time=rng.uniform(0.2, 0.8),
        gamma=gamma,
        v=rng.uniform(40.0, 100.0),
        fixed_cost=0.0,
        delivery_time=delivery_time,
    )
    out = static_outcome(mid, probe)
    margin = (1.0 - mid.commission) * out.gmv
    fixed_cost = rng.uniform(0.7, 1.1) * max(margin, 1.0)
    return StaticParams(
        theta=theta,
        eta=eta,
        delta=delta,
        beta_time=probe.beta_time,
        gamma=gamma,
        v=probe.v,
        fixed_cost=fixed_cost,
        delivery_time=delivery_time,
    )
