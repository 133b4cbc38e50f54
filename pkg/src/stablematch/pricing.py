"""Price vectors for a given matching.

Four policies:

* ``shapley_shubik_prices`` -- solve the market and price each sale at the
  seller's dual potential above cost; the result is stable.
* ``half_prices`` -- split each pair's surplus evenly.  Computable online
  (needs only the pair itself) and guarantees a stability index of at least
  half the matching's optimality ratio.
* ``min_si_prices`` -- choose prices minimizing subset instability via an LP
  over (prices, subsidies); the resulting index equals the optimality ratio.
* ``clamp_prices_ir`` -- clamp each sale price into [cost, buyer valuation];
  restores individual rationality without increasing subset instability.
"""
from __future__ import annotations

import numpy as np

from .assignment import max_weight_matching, optimal_value
from .errors import DomainError
from .metrics import subset_instability
from .model import (
    Allocation,
    Market,
    Matching,
    is_individually_rational,
    is_stable,
    social_welfare,
)
from .simplex import OPTIMAL, LinearProgram, solve

_SI_TOL = 1e-6


def shapley_shubik_prices(market: Market) -> Allocation:
    """Stable allocation: optimal matching priced from its dual potentials."""
    res = max_weight_matching(market.surplus)
    prices = market.c.copy()
    for i, j in res.matching.pairs:
        prices[j] = res.beta[j] + market.c[j]
    alloc = Allocation(res.matching, prices)
    if not is_stable(market, alloc):
        raise AssertionError("dual-potential prices must be stable")
    return alloc


def half_prices(market: Market, matching: Matching) -> Allocation:
    """Each matched seller priced at cost plus half the pair's surplus."""
    a = market.surplus
    prices = market.c.copy()
    for i, j in matching.pairs:
        prices[j] = market.c[j] + a[i, j] / 2.0
    return Allocation(matching, prices)


def clamp_prices_ir(market: Market, alloc: Allocation) -> Allocation:
    """Clamp sale prices into [cost, buyer valuation]; unmatched stay at cost.

    Output is individually rational and its subset instability never exceeds
    the input's (asserted).
    """
    a = market.surplus
    prices = market.c.copy()
    for i, j in alloc.matching.pairs:
        if a[i, j] < 0:
            raise DomainError(
                f"matched pair ({i}, {j}) has negative surplus; clamping undefined"
            )
        prices[j] = min(max(alloc.prices[j], market.c[j]), market.h[i, j])
    clamped = Allocation(alloc.matching, prices)
    if not is_individually_rational(market, clamped):
        raise AssertionError("clamped allocation must be individually rational")
    if subset_instability(market, clamped) > subset_instability(market, alloc) + 1e-9:
        raise AssertionError("clamping must not increase subset instability")
    return clamped


def min_si_prices(market: Market, matching: Matching) -> Allocation:
    """Prices minimizing subset instability for the given matching.

    Solves min sum(tau) + sum(eta) over (p, tau, eta) where utilities are the
    affine functions of the sale prices, then clamps the price component to
    individual rationality.  The result achieves SI = OPT - SW(matching), the
    smallest value any price vector allows, so the stability index equals the
    optimality ratio.
    """
    nb, ns = market.n_buyers, market.n_sellers
    a = market.surplus
    seller_of = {i: j for i, j in matching.pairs}
    buyer_of = {j: i for i, j in matching.pairs}
    matched_sellers = sorted(buyer_of)
    p_col = {j: k for k, j in enumerate(matched_sellers)}
    n_p = len(matched_sellers)
    n_vars = n_p + nb + ns  # prices (free), tau, eta

    def u_terms(i: int, row: np.ndarray) -> float:
        """Add buyer i's utility as coefficients into row; return constant."""
        j = seller_of.get(i)
        if j is None:
            return 0.0
        row[p_col[j]] -= 1.0
        return float(market.h[i, j])

    def v_terms(j: int, row: np.ndarray) -> float:
        if j not in buyer_of:
            return 0.0
        row[p_col[j]] += 1.0
        return float(-market.c[j])

    rows, senses, rhs = [], [], []
    for i in range(nb):
        row = np.zeros(n_vars)
        const = u_terms(i, row)
        row[n_p + i] += 1.0
        rows.append(row)
        senses.append(">=")
        rhs.append(-const)
    for j in range(ns):
        row = np.zeros(n_vars)
        const = v_terms(j, row)
        row[n_p + nb + j] += 1.0
        rows.append(row)
        senses.append(">=")
        rhs.append(-const)
    for i in range(nb):
        for j in range(ns):
            row = np.zeros(n_vars)
            const = u_terms(i, row) + v_terms(j, row)
            row[n_p + i] += 1.0
            row[n_p + nb + j] += 1.0
            rows.append(row)
            senses.append(">=")
            rhs.append(a[i, j] - const)
    objective = np.concatenate([np.zeros(n_p), np.ones(nb + ns)])
    free = tuple([True] * n_p + [False] * (nb + ns))
    lp = LinearProgram(objective, np.array(rows), tuple(senses), np.array(rhs), free)
    status, value, x = solve(lp)
    if status != OPTIMAL:
        raise AssertionError(f"price-optimization LP must be solvable, got {status}")

    prices = market.c.copy()
    for j in matched_sellers:
        prices[j] = x[p_col[j]]
    alloc = clamp_prices_ir(market, Allocation(matching, prices))
    target = optimal_value(market) - social_welfare(market, matching)
    achieved = subset_instability(market, alloc)
    if abs(achieved - target) > _SI_TOL:
        raise AssertionError(
            f"minimized subset instability {achieved} differs from optimality "
            f"gap {target}"
        )
    return alloc
