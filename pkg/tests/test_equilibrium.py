"""One-period model tests: closed forms against independent oracles, optimizer
against brute-force grids, and the ordering lemmas as executable checks."""

import numpy as np
import pytest

from deliverysim.config import ControlBounds, Controls, StaticParams, derive_stream
from deliverysim import equilibrium as eq

CANONICAL = StaticParams(
    theta=100.0, eta=2.0, delta=1.0, beta_time=0.5,
    gamma=2.0, v=60.0, fixed_cost=150.0, delivery_time=10.0,
)
BOUNDS = ControlBounds(commission=(0.05, 0.25), delivery_fee=(2.0, 12.0), wage=(3.0, 15.0))


def controls(alpha=0.1, fee=5.0, wage=5.0):
    return Controls(commission=alpha, delivery_fee=fee, wage=wage)


# -- oracles -----------------------------------------------------------------


def grid_search_price(c: Controls, p: StaticParams, step=1e-4, hi=50.0) -> float:
    """Brute-force maximizer of (1-alpha)*A*Q over item prices."""
    prices = np.arange(0.0, hi + step, step)
    qty = np.maximum(0.0, p.theta - p.eta * (prices + c.delivery_fee) - p.delta * p.delivery_time)
    value = (1.0 - c.commission) * prices * qty
    return float(prices[np.argmax(value)])


def bisect_choke(p: StaticParams, lo=0.0, hi=1000.0, iters=80) -> float:
    """Solve demand(P) = 0 for the effective price by bisection."""
    def f(x):
        return p.theta - p.eta * x - p.delta * p.delivery_time
    if f(lo) <= 0:
        return lo
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def trapezoid_cs(effective_price: float, p: StaticParams, steps=1_000_000) -> float:
    """Numerical integral of demand from P to the choke price."""
    p_max = max(0.0, (p.theta - p.delta * p.delivery_time) / p.eta)
    if effective_price >= p_max:
        return 0.0
    grid = np.linspace(effective_price, p_max, steps + 1)
    integrand = p.theta - p.eta * grid - p.delta * p.delivery_time
    return float(np.trapezoid(integrand, grid))


def brute_force_controls(objective: str, p: StaticParams, bounds: ControlBounds, n=41):
    """Exhaustive grid argmax over the control box, first-max tie-break."""
    alphas = np.linspace(*bounds.commission, n)
    fees = np.linspace(*bounds.delivery_fee, n)
    wages = np.linspace(*bounds.wage, n)
    best = (-np.inf, None)
    for a in alphas:
        for d in fees:
            for w in wages:
                c = Controls(commission=float(a), delivery_fee=float(d), wage=float(w))
                v = eq.evaluate_objective(objective, c, p)
                if v > best[0]:
                    best = (v, c)
    return best


# -- demand and closed forms ---------------------------------------------------


def test_demand_example():
    assert eq.demand(20.0, controls(fee=5.0), CANONICAL) == 40.0


def test_demand_zero_at_choke():
    p_max = eq.choke_price(CANONICAL)
    c = controls(fee=5.0)
    assert eq.demand(p_max - 5.0, c, CANONICAL) == pytest.approx(0.0, abs=1e-12)


def test_demand_clamped_when_negative():
    assert eq.demand(1000.0, controls(fee=12.0), CANONICAL) == 0.0


def test_optimal_price_canonical():
    # frozen from the grid-search oracle (step 1e-4): 20.0
    c = controls(fee=5.0)
    assert eq.optimal_price(c, CANONICAL) == pytest.approx(20.0, abs=1e-12)
    assert eq.optimal_price(c, CANONICAL) == pytest.approx(
        grid_search_price(c, CANONICAL), abs=1e-3
    )


def test_optimal_price_second_instance():
    p = StaticParams(theta=50.0, eta=1.0, delta=0.5, beta_time=0.2,
                     gamma=1.0, v=40.0, fixed_cost=10.0, delivery_time=4.0)
    c = controls(fee=2.0)
    assert eq.optimal_price(c, p) == pytest.approx(23.0, abs=1e-12)
    assert eq.optimal_price(c, p) == pytest.approx(grid_search_price(c, p), abs=1e-3)


def test_optimal_price_zero_numerator():
    p = StaticParams(theta=14.0, eta=2.0, delta=1.0, beta_time=0.0,
                     gamma=0.0, v=10.0, fixed_cost=0.0, delivery_time=10.0)
    # theta = eta*D + delta*t exactly
    assert eq.optimal_price(controls(fee=2.0), p) == 0.0


def test_optimal_price_rejects_bad_eta():
    bad = StaticParams.__new__(StaticParams)
    object.__setattr__(bad, "theta", 10.0)
    object.__setattr__(bad, "eta", 0.0)
    object.__setattr__(bad, "delta", 0.0)
    object.__setattr__(bad, "delivery_time", 0.0)
    with pytest.raises(ValueError):
        eq.optimal_price(controls(), bad)
    with pytest.raises(ValueError):
        eq.choke_price(bad)


def test_choke_price_values():
    assert eq.choke_price(CANONICAL) == pytest.approx(45.0, abs=1e-12)
    assert eq.choke_price(CANONICAL) == pytest.approx(bisect_choke(CANONICAL), abs=1e-9)
    p = StaticParams(theta=50.0, eta=1.0, delta=0.5, beta_time=0.2,
                     gamma=1.0, v=40.0, fixed_cost=10.0, delivery_time=4.0)
    assert eq.choke_price(p) == pytest.approx(48.0, abs=1e-12)
    assert eq.choke_price(p) == pytest.approx(bisect_choke(p), abs=1e-9)


def test_choke_price_fully_choked_market():
    p = StaticParams(theta=10.0, eta=2.0, delta=1.5, beta_time=0.0,
                     gamma=0.0, v=10.0, fixed_cost=0.0, delivery_time=10.0)
    assert eq.choke_price(p) == 0.0


# -- utilities ----------------------------------------------------------------


def test_restaurant_utility_examples():
    assert eq.restaurant_utility(20.0, 40.0, controls(alpha=0.1), CANONICAL) == pytest.approx(570.0)
    zero = StaticParams(theta=1.0, eta=1.0, delta=0.0, beta_time=0.0,
                        gamma=0.0, v=0.0, fixed_cost=0.0, delivery_time=0.0)
    assert eq.restaurant_utility(5.0, 0.0, controls(alpha=0.0), zero) == 0.0
    p = StaticParams(theta=1.0, eta=1.0, delta=0.0, beta_time=0.0,
                     gamma=0.0, v=0.0, fixed_cost=100.0, delivery_time=0.0)
    assert eq.restaurant_utility(20.0, 20.0, controls(alpha=0.25), p) == pytest.approx(200.0)


def test_consumer_utility_examples():
    assert eq.consumer_utility(25.0, controls(fee=5.0), CANONICAL) == pytest.approx(25.0)
    zero = StaticParams(theta=1.0, eta=1.0, delta=0.0, beta_time=0.0,
                        gamma=0.0, v=0.0, fixed_cost=0.0, delivery_time=0.0)
    assert eq.consumer_utility(0.0, controls(fee=0.0), zero) == 0.0
    slow = StaticParams(theta=100.0, eta=2.0, delta=1.0, beta_time=0.5,
                        gamma=2.0, v=60.0, fixed_cost=150.0, delivery_time=120.0)
    assert eq.consumer_utility(25.0, controls(fee=5.0), slow) == pytest.approx(-30.0)


def test_worker_utility_examples():
    p = StaticParams(theta=1.0, eta=1.0, delta=0.0, beta_time=0.0,
                     gamma=2.0, v=0.0, fixed_cost=0.0, delivery_time=0.0)
    assert eq.worker_utility(10.0, 3.0, controls(wage=5.0), p) == pytest.approx(44.0)
    free = StaticParams(theta=1.0, eta=1.0, delta=0.0, beta_time=0.0,
                        gamma=0.0, v=0.0, fixed_cost=0.0, delivery_time=0.0)
    assert eq.worker_utility(17.0, 99.0, controls(wage=0.0), free) == 0.0
    p2 = StaticParams(theta=1.0, eta=1.0, delta=0.0, beta_time=0.0,
                      gamma=1.0, v=0.0, fixed_cost=0.0, delivery_time=0.0)
    assert eq.worker_utility(1.0, 5.0, controls(wage=3.0), p2) == pytest.approx(-2.0)


# -- consumer surplus ----------------------------------------------------------


def test_consumer_surplus_against_integration():
    assert eq.consumer_surplus(25.0, CANONICAL) == pytest.approx(400.0, abs=1e-9)
    assert eq.consumer_surplus(25.0, CANONICAL) == pytest.approx(
        trapezoid_cs(25.0, CANONICAL), rel=1e-6
    )
    assert eq.consumer_surplus(35.0, CANONICAL) == pytest.approx(100.0, abs=1e-9)
    assert eq.consumer_surplus(35.0, CANONICAL) == pytest.approx(
        trapezoid_cs(35.0, CANONICAL), rel=1e-6
    )


def test_consumer_surplus_zero_at_and_above_choke():
    p_max = eq.choke_price(CANONICAL)
    assert eq.consumer_surplus(p_max, CANONICAL) == 0.0
    assert eq.consumer_surplus(p_max + 10.0, CANONICAL) == 0.0


def test_consumer_surplus_matches_integration_on_random_instances():
    stream = derive_stream(20240801, 0, "cs-property")
    for _ in range(200):
        p = eq.sample_instance(stream)
        p_max = eq.choke_price(p)
        price = stream.generator.uniform(0.0, p_max * 0.98)
        closed = eq.consumer_surplus(price, p)
        numeric = trapezoid_cs(price, p, steps=20000)
        assert closed == pytest.approx(numeric, rel=1e-6)


# -- surplus report -------------------------------------------------------------


def test_surplus_report_composition():
    rep = eq.surplus_report(controls(alpha=0.1, fee=5.0), CANONICAL)
    # optimal price 20, quantity 40: sales 800, margin 0.9*800 - 150
    assert rep.restaurant_surplus == pytest.approx(570.0)
    assert rep.consumer_surplus == pytest.approx(400.0)
    assert rep.choke_price == pytest.approx(45.0)


def test_surplus_report_no_sales():
    p = StaticParams(theta=14.0, eta=2.0, delta=1.0, beta_time=0.0,
                     gamma=0.0, v=10.0, fixed_cost=75.0, delivery_time=10.0)
    rep = eq.surplus_report(controls(alpha=0.2, fee=2.0), p)
    assert rep.restaurant_surplus == pytest.approx(-75.0)


def test_surplus_report_explicit_workload():
    p = StaticParams(theta=100.0, eta=2.0, delta=1.0, beta_time=0.5,
                     gamma=2.0, v=60.0, fixed_cost=150.0, delivery_time=10.0)
    rep = eq.surplus_report(controls(wage=5.0), p, orders=10.0, time_spent=3.0)
    assert rep.worker_surplus == pytest.approx(44.0)


# -- platform optimization -------------------------------------------------------


def test_solve_static_gmv_fee_at_lower_bound():
    # the GMV derivative in the fee is negative across the box for this family
    for theta in (60.0, 100.0, 140.0):
        p = StaticParams(theta=theta, eta=2.0, delta=1.0, beta_time=0.5,
                         gamma=2.0, v=60.0, fixed_cost=150.0, delivery_time=10.0)
        fees = np.linspace(*BOUNDS.delivery_fee, 25)
        gmv = [(eq.evaluate_objective("GMV", controls(fee=float(f)), p)) for f in fees]
        assert all(b < a for a, b in zip(gmv, gmv[1:]))  # strictly decreasing
        best = eq.solve_static("GMV", p, BOUNDS)
        assert best.delivery_fee == pytest.approx(BOUNDS.delivery_fee[0], abs=1e-9)


def test_solve_static_singleton_box():
    point = ControlBounds(commission=(0.1, 0.1), delivery_fee=(4.0, 4.0), wage=(6.0, 6.0))
    for objective in ("GMV", "SW"):
        best = eq.solve_static(objective, CANONICAL, point)
        assert (best.commission, best.delivery_fee, best.wage) == (0.1, 4.0, 6.0)


def test_solve_static_sw_matches_brute_force_grid():
    value, oracle = brute_force_controls("SW", CANONICAL, BOUNDS, n=41)
    best = eq.solve_static("SW", CANONICAL, BOUNDS)
    cell = (
        (BOUNDS.commission[1] - BOUNDS.commission[0]) / 40,
        (BOUNDS.delivery_fee[1] - BOUNDS.delivery_fee[0]) / 40,
        (BOUNDS.wage[1] - BOUNDS.wage[0]) / 40,
    )
    assert abs(best.commission - oracle.commission) <= cell[0] + 1e-12
    assert abs(best.delivery_fee - oracle.delivery_fee) <= cell[1] + 1e-12
    assert abs(best.wage - oracle.wage) <= cell[2] + 1e-12
    assert eq.evaluate_objective("SW", best, CANONICAL) >= value - 1e-9


def test_solve_static_objective_close_to_fine_grid():
    value, _ = brute_force_controls("GMV", CANONICAL, BOUNDS, n=41)
    best = eq.solve_static("GMV", CANONICAL, BOUNDS)
    achieved = eq.evaluate_objective("GMV", best, CANONICAL)
    assert achieved >= value * (1.0 - 1e-4)


def test_solve_static_round_cap():
    with pytest.raises(eq.SolverError):
        eq.solve_static("GMV", CANONICAL, BOUNDS, rounds=99, max_rounds=10)


def test_solve_static_rejects_unknown_objective():
    with pytest.raises(ValueError):
        eq.solve_static("PROFIT", CANONICAL, BOUNDS)


# -- lemma checks -----------------------------------------------------------------


def test_lemma_orderings_canonical():
    rep = eq.check_lemma_orderings(CANONICAL, BOUNDS)
    assert rep.sw_dominance
    assert rep.commission_ordering
    assert rep.fee_ordering
    assert rep.wage_ordering
    assert rep.sw_at_sw >= rep.sw_at_gmv - 1e-6


def test_lemma_orderings_singleton_box_equalities():
    point = ControlBounds(commission=(0.1, 0.1), delivery_fee=(4.0, 4.0), wage=(6.0, 6.0))
    rep = eq.check_lemma_orderings(CANONICAL, point)
    assert rep.controls_gmv == rep.controls_sw
    assert rep.commission_ordering and rep.fee_ordering and rep.wage_ordering
    assert rep.sw_at_sw == pytest.approx(rep.sw_at_gmv)


def test_lemma_wage_ordering_with_dominant_worker_cost():
    heavy = StaticParams(theta=100.0, eta=2.0, delta=1.0, beta_time=0.5,
                         gamma=5.0, v=60.0, fixed_cost=150.0, delivery_time=10.0)
    rep = eq.check_lemma_orderings(heavy, BOUNDS)
    assert rep.wage_ordering
    assert rep.sw_dominance


def test_lemma_a2_on_random_instances():
    stream = derive_stream(77, 0, "lemma-a2")
    for _ in range(60):
        p = eq.sample_instance(stream)
        rep = eq.check_lemma_orderings(p, BOUNDS)
        assert rep.sw_at_sw >= rep.sw_at_gmv - 1e-6


def test_lemma_a1_on_typical_family():
    stream = derive_stream(78, 0, "lemma-a1")
    hold = 0
    trials = 60
    for _ in range(trials):
        p = eq.sample_typical_instance(stream, BOUNDS)
        rep = eq.check_lemma_orderings(p, BOUNDS)
        if rep.commission_ordering and rep.fee_ordering and rep.wage_ordering:
            hold += 1
    assert hold / trials >= 0.95


# -- finite-difference diagnostics -------------------------------------------------


def test_concavity_second_difference():
    stream = derive_stream(79, 0, "concavity")
    for _ in range(100):
        p = eq.sample_instance(stream)
        c = controls(alpha=float(stream.generator.uniform(0.0, 0.5)), fee=2.0)
        second = eq.price_second_difference(c, p)
        assert second <= -(1.0 - c.commission) * 2.0 * p.eta + 1e-6


def test_first_order_condition_at_interior_optimum():
    stream = derive_stream(80, 0, "foc")
    checked = 0
    for _ in range(200):
        p = eq.sample_instance(stream)
        c = controls(fee=2.0)
        a_star = eq.optimal_price(c, p)
        p_max = eq.choke_price(p)
        if not 0.1 < a_star < p_max - c.delivery_fee - 0.1:
            continue
        checked += 1
        assert abs(eq.price_foc_residual(c, p)) <= 1e-6
    assert checked > 50


def test_sw_gradient_sign_in_commission():
    stream = derive_stream(81, 0, "sw-grad")
    for _ in range(50):
        p = eq.sample_typical_instance(stream, BOUNDS)
        best = eq.solve_static("SW", p, BOUNDS)
        if not (BOUNDS.commission[0] < best.commission < BOUNDS.commission[1]):
            # boundary optimum: the sign check applies to interior points only
            mid = controls(alpha=0.15, fee=best.delivery_fee, wage=best.wage)
            g_alpha, _, _ = eq.objective_gradient("SW", mid, p)
        else:
            g_alpha, _, _ = eq.objective_gradient("SW", best, p)
        assert g_alpha <= 1e-6


def test_aggregate_outcome_sums_copies():
    p1 = CANONICAL
    p2 = StaticParams(theta=80.0, eta=2.0, delta=1.0, beta_time=0.5,
                      gamma=2.0, v=60.0, fixed_cost=100.0, delivery_time=8.0)
    c = controls()
    gmv, sw = eq.aggregate_outcome(c, [p1, p2])
    o1, o2 = eq.static_outcome(c, p1), eq.static_outcome(c, p2)
    assert gmv == pytest.approx(o1.gmv + o2.gmv)
    assert sw == pytest.approx(o1.social_welfare + o2.social_welfare)
