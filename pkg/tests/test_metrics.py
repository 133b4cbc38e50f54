"""Stability metrics against their definitional oracles."""
from __future__ import annotations

import numpy as np
import pytest

import helpers
from stablematch import (
    Allocation,
    CapacityError,
    DomainError,
    Market,
    Matching,
    brute_force_si,
    is_individually_rational,
    is_stable,
    kappa,
    kappa_raw,
    kappa_submarket_oracle,
    metric_report,
    optimality_ratio,
    stability_index,
    subset_instability,
)
from stablematch import instances as lab


def split_pair_allocation() -> tuple[Market, Allocation]:
    market = lab.diagonal(0.5)
    return market, Allocation(Matching.from_pairs([(0, 0)]), np.zeros(2))


def test_optimality_ratio_examples(housing, housing_suboptimal):
    assert optimality_ratio(housing, housing_suboptimal.matching) == pytest.approx(2 / 3)
    assert optimality_ratio(housing, Matching.from_pairs([(0, 0), (2, 1)])) == 1.0
    market, alloc = split_pair_allocation()
    assert optimality_ratio(market, alloc.matching) == pytest.approx(0.5)


def test_subset_instability_examples(housing, housing_suboptimal):
    assert subset_instability(housing, housing_suboptimal) == pytest.approx(4.0)
    stable = Allocation(Matching.from_pairs([(0, 0), (2, 1)]), np.array([6.0, 12.0]))
    assert subset_instability(housing, stable) == pytest.approx(0.0)


def test_subset_instability_with_negative_utility(housing):
    # price 9 leaves the second seller below cost; the oracle value is 6:
    # the aggrieved third buyer and that seller can create 5 on their own
    # while jointly holding -1
    alloc = Allocation(Matching.from_pairs([(0, 0), (1, 1)]), np.array([7.0, 9.0]))
    expected = brute_force_si(housing, alloc)
    assert expected == pytest.approx(6.0)
    assert subset_instability(housing, alloc) == pytest.approx(expected)


def test_stability_index_examples(housing, housing_suboptimal):
    assert stability_index(housing, housing_suboptimal) == pytest.approx(5 / 9)
    stable = Allocation(Matching.from_pairs([(0, 0), (2, 1)]), np.array([6.0, 12.0]))
    assert stability_index(housing, stable) == pytest.approx(1.0)
    market, alloc = split_pair_allocation()
    assert stability_index(market, alloc) == pytest.approx(0.5)


def test_kappa_examples(housing, housing_suboptimal):
    assert kappa(housing, housing_suboptimal) == pytest.approx(0.2)
    stable = Allocation(Matching.from_pairs([(0, 0), (2, 1)]), np.array([6.0, 12.0]))
    assert kappa(housing, stable) == pytest.approx(1.0)
    for kappa0 in (0.1, 0.5, 0.9):
        market = lab.diagonal(kappa0)
        alloc = Allocation(Matching.from_pairs([(0, 0)]), np.zeros(2))
        assert kappa(market, alloc) == pytest.approx(0.0)


def test_kappa_rejects_non_ir(housing):
    alloc = Allocation(Matching.from_pairs([(1, 1)]), np.array([6.0, 9.0]))
    with pytest.raises(DomainError, match="Edward"):
        kappa(housing, alloc)


def test_kappa_undefined_on_zero_market():
    market = Market(("b",), ("s",), [[2.0]], [2.0])
    alloc = Allocation(Matching.from_pairs([]), np.array([2.0]))
    assert kappa(market, alloc) is None


def test_kappa_submarket_oracle(housing, housing_suboptimal):
    assert kappa_submarket_oracle(housing, housing_suboptimal) == pytest.approx(0.2)
    stable = Allocation(Matching.from_pairs([(0, 0), (2, 1)]), np.array([6.0, 12.0]))
    assert kappa_submarket_oracle(housing, stable) >= 1.0 - 1e-9
    market, alloc = split_pair_allocation()
    assert kappa_submarket_oracle(market, alloc) == pytest.approx(0.0)


def test_kappa_matches_submarket_oracle_random():
    rng = np.random.default_rng(5)
    checked = 0
    while checked < 60:
        market = helpers.random_market(rng)
        alloc = helpers.random_ir_allocation(rng, market)
        oracle = kappa_submarket_oracle(market, alloc)
        value = kappa(market, alloc)
        if oracle is None:
            assert value is None
            continue
        assert value == pytest.approx(min(1.0, oracle), abs=1e-9)
        checked += 1


def test_size_guards():
    market = lab.random_market(5, 5, seed=1)
    alloc = Allocation(Matching.from_pairs([]), market.c.copy())
    with pytest.raises(CapacityError):
        brute_force_si(market, alloc)
    with pytest.raises(CapacityError):
        kappa_submarket_oracle(market, alloc)


def test_reduction_matches_brute_force_random():
    rng = np.random.default_rng(17)
    for _ in range(80):
        market = helpers.random_market(rng)
        alloc = helpers.random_allocation(rng, market)
        assert subset_instability(market, alloc) == pytest.approx(
            brute_force_si(market, alloc), abs=1e-9
        )


def test_chain_kappa_norm_si_lambda_on_ir_allocations():
    rng = np.random.default_rng(29)
    for _ in range(80):
        market = helpers.random_market(rng)
        alloc = helpers.random_ir_allocation(rng, market)
        rep = metric_report(market, alloc)
        assert rep.norm_si <= rep.lambda_ + 1e-9
        if rep.kappa is not None:
            assert rep.kappa <= rep.norm_si + 1e-9


def test_norm_si_bounded_by_lambda_even_without_ir():
    rng = np.random.default_rng(31)
    for _ in range(60):
        market = helpers.random_market(rng)
        alloc = helpers.random_allocation(rng, market)
        rep = metric_report(market, alloc)
        assert rep.norm_si <= rep.lambda_ + 1e-9


def test_scale_covariance():
    rng = np.random.default_rng(41)
    for _ in range(20):
        market = helpers.random_market(rng, with_costs=True)
        alloc = helpers.random_ir_allocation(rng, market)
        rep = metric_report(market, alloc)
        for s in (0.5, 3.0):
            scaled_market = Market(
                market.buyer_ids, market.seller_ids, market.h * s, market.c * s
            )
            scaled_alloc = Allocation(alloc.matching, alloc.prices * s)
            srep = metric_report(scaled_market, scaled_alloc)
            assert srep.si == pytest.approx(s * rep.si, abs=1e-9)
            assert srep.lambda_ == pytest.approx(rep.lambda_, abs=1e-9)
            assert srep.norm_si == pytest.approx(rep.norm_si, abs=1e-9)
            if rep.kappa is not None:
                assert srep.kappa == pytest.approx(rep.kappa, abs=1e-9)


def test_zero_optimum_conventions():
    market = Market(("b",), ("s",), [[3.0]], [3.0])
    alloc = Allocation(Matching.from_pairs([(0, 0)]), np.array([3.0]))
    rep = metric_report(market, alloc)
    assert rep.lambda_ == 1.0 and rep.norm_si == 1.0 and rep.kappa is None


def test_si_zero_iff_stable_random():
    rng = np.random.default_rng(43)
    for _ in range(60):
        market = helpers.random_market(rng)
        alloc = helpers.random_allocation(rng, market)
        si = subset_instability(market, alloc)
        stable = is_stable(market, alloc)
        assert stable == (si <= 1e-9)
        if not is_individually_rational(market, alloc):
            assert si > 0


def test_kappa_raw_uncapped(housing):
    # a single matched pair holding the whole market's surplus can exceed
    # every other pair's requirement
    market = Market(("b1", "b2"), ("s1", "s2"), [[5.0, 1.0], [0.0, 0.0]], [0.0, 0.0])
    alloc = Allocation(Matching.from_pairs([(0, 0)]), np.array([2.0, 0.0]))
    raw = kappa_raw(market, alloc)
    value = kappa(market, alloc)
    assert raw == pytest.approx(1.0)  # the matched pair itself pins the minimum
    assert value == pytest.approx(min(1.0, raw))
