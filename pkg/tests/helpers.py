"""Shared builders for randomized sweeps."""
from __future__ import annotations

import numpy as np

from stablematch import Allocation, Market, Matching


def random_market(rng, max_side: int = 3, low: int = 0, high: int = 10,
                  with_costs: bool = False) -> Market:
    """Integer-surplus market; optionally with nonzero seller costs."""
    nb = int(rng.integers(1, max_side + 1))
    ns = int(rng.integers(1, max_side + 1))
    a = rng.integers(low, high + 1, size=(nb, ns)).astype(float)
    c = rng.integers(0, 6, size=ns).astype(float) if with_costs else np.zeros(ns)
    return Market(
        tuple(f"b{i}" for i in range(nb)),
        tuple(f"s{j}" for j in range(ns)),
        a + c[None, :], c,
    )


def random_matching(rng, market: Market) -> Matching:
    buyers = list(rng.permutation(market.n_buyers))
    sellers = list(rng.permutation(market.n_sellers))
    size = int(rng.integers(0, min(len(buyers), len(sellers)) + 1))
    return Matching.from_pairs(zip(buyers[:size], sellers[:size]))


def random_prices(rng, market: Market, spread: float = 4.0) -> np.ndarray:
    """Arbitrary prices around cost; may violate individual rationality."""
    return market.c + rng.uniform(-spread, spread, size=market.n_sellers).round(1)


def random_allocation(rng, market: Market) -> Allocation:
    return Allocation(random_matching(rng, market), random_prices(rng, market))


def random_ir_allocation(rng, market: Market) -> Allocation:
    """Random matching with each sale price drawn inside [cost, valuation]."""
    matching = random_matching(rng, market)
    prices = market.c.copy()
    for i, j in matching.pairs:
        prices[j] = rng.uniform(market.c[j], market.h[i, j])
    return Allocation(matching, prices)
