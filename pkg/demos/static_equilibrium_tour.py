"""A walking tour of the one-period market model.

Run with:  python3 demos/static_equilibrium_tour.py

We set up a single canonical market, look at how demand and the restaurant's
best-response price react to the platform's controls, then let the platform
optimize both of its candidate objectives and compare what it chooses.
"""

import numpy as np

from deliverysim import (
    ControlBounds,
    Controls,
    StaticParams,
    check_lemma_orderings,
    choke_price,
    consumer_surplus,
    demand,
    optimal_price,
    solve_static,
    static_outcome,
    surplus_report,
)

params = StaticParams(
    theta=100.0,      # baseline demand
    eta=2.0,          # orders lost per currency unit of effective price
    delta=1.0,        # orders lost per minute of delivery time
    beta_time=0.5,    # consumer time disutility
    gamma=2.0,        # worker time cost per minute
    v=60.0,           # consumer valuation
    fixed_cost=150.0, # restaurant fixed cost per period
    delivery_time=10.0,
)
bounds = ControlBounds(commission=(0.05, 0.25), delivery_fee=(2.0, 12.0), wage=(3.0, 15.0))

print("=== the demand side ===")
mid = Controls(commission=0.15, delivery_fee=5.0, wage=9.0)
print(f"choke price (demand hits zero): {choke_price(params):.1f}")
for price in (10.0, 20.0, 30.0, 40.0):
    print(f"  item price {price:5.1f} -> demand {demand(price, mid, params):6.1f} orders")

print("\n=== the restaurant's best response ===")
for fee in (2.0, 7.0, 12.0):
    c = Controls(commission=0.15, delivery_fee=fee, wage=9.0)
    a_star = optimal_price(c, params)
    print(
        f"  fee {fee:4.1f} -> optimal item price {a_star:5.2f}, "
        f"demand {demand(a_star, c, params):5.1f}, "
        f"consumer surplus {consumer_surplus(a_star + fee, params):7.1f}"
    )

print("\n=== platform optimization: revenue vs welfare ===")
for objective in ("GMV", "SW"):
    best = solve_static(objective, params, bounds)
    out = static_outcome(best, params)
    print(
        f"  {objective:3s} optimum: commission {best.commission:.3f}, "
        f"fee {best.delivery_fee:5.2f}, wage {best.wage:5.2f}  ->  "
        f"GMV {out.gmv:8.1f}, welfare {out.social_welfare:9.1f}"
    )
    rep = surplus_report(best, params)
    print(
        f"       surplus: consumers {rep.consumer_surplus:8.1f}, "
        f"restaurants {rep.restaurant_surplus:8.1f}, workers {rep.worker_surplus:9.1f}"
    )

print("\n=== ordering lemmas as executable checks ===")
lemma = check_lemma_orderings(params, bounds)
print(f"  commission_SW <= commission_GMV : {lemma.commission_ordering}")
print(f"  fee_SW        >= fee_GMV        : {lemma.fee_ordering}")
print(f"  wage_SW       >= wage_GMV       : {lemma.wage_ordering}")
print(f"  SW at SW-optimum >= SW at GMV-optimum : {lemma.sw_dominance}")
print(f"    ({lemma.sw_at_sw:.1f} vs {lemma.sw_at_gmv:.1f})")

print("\nThe welfare objective accepts a smaller transaction volume in exchange")
print("for funding the delivery side; revenue maximization leaves wages at the")
print("floor because transaction value never sees them.")
