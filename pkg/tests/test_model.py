"""Market model, utilities, and stability checks."""
from __future__ import annotations

import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import helpers
from stablematch import (
    Allocation,
    Market,
    Matching,
    StructuralError,
    find_blocking_pair,
    is_individually_rational,
    is_stable,
    social_welfare,
    subset_instability,
    surplus_matrix,
    utilities,
)


def test_housing_surplus_matrix(housing):
    np.testing.assert_allclose(surplus_matrix(housing), [[4, 0], [0, 2], [0, 5]])


def test_zero_surplus_when_valuations_equal_costs():
    m = Market(("b1", "b2"), ("s1",), [[3.0], [3.0]], [3.0])
    np.testing.assert_allclose(surplus_matrix(m), [[0], [0]])


def test_negative_surplus_clamped_and_recorded(caplog):
    with caplog.at_level(logging.INFO, logger="stablematch"):
        m = Market(("b",), ("s1", "s2"), [[2.0, 9.0]], [5.0, 1.0])
    assert m.clamped_pairs == ((0, 0),)
    assert m.h[0, 0] == 5.0  # lifted to cost, surplus exactly zero
    assert m.surplus[0, 0] == 0.0
    assert m.surplus[0, 1] == 8.0
    assert any("clamped" in r.message for r in caplog.records)


def test_market_validation_errors():
    with pytest.raises(StructuralError):
        Market(("b",), ("s",), [[1.0, 2.0]], [0.0])
    with pytest.raises(StructuralError):
        Market(("b",), ("s",), [[np.inf]], [0.0])
    with pytest.raises(StructuralError):
        Market(("b",), ("s",), [[-1.0]], [0.0])
    with pytest.raises(StructuralError):
        Market(("b",), ("s",), [[1.0]], [0.0, 1.0])


def test_matching_rejects_duplicates():
    with pytest.raises(StructuralError):
        Matching.from_pairs([(0, 0), (0, 1)])
    with pytest.raises(StructuralError):
        Matching.from_pairs([(0, 0), (1, 0)])


def test_utilities_worked_example(housing):
    alloc = Allocation(Matching.from_pairs([(0, 0)]), np.array([7.0, 10.0]))
    prof = utilities(housing, alloc)
    assert prof.u[0] == 3.0
    assert prof.v[0] == 1.0


def test_utilities_empty_matching_all_zero(housing):
    prof = utilities(housing, Allocation(Matching.from_pairs([]), np.array([3.0, 4.0])))
    assert (prof.u == 0).all() and (prof.v == 0).all()


def test_utilities_seller_below_cost(housing):
    alloc = Allocation(Matching.from_pairs([(1, 1)]), np.array([6.0, 9.0]))
    prof = utilities(housing, alloc)
    assert prof.v[1] == -1.0


def test_utilities_index_out_of_range(housing):
    alloc = Allocation(Matching.from_pairs([(5, 0)]), np.array([0.0, 0.0]))
    with pytest.raises(StructuralError):
        utilities(housing, alloc)
    with pytest.raises(StructuralError):
        utilities(housing, Allocation(Matching.from_pairs([(0, 0)]), np.array([1.0])))


def test_social_welfare_worked_example(housing):
    assert social_welfare(housing, Matching.from_pairs([(0, 0), (1, 1)])) == 6.0
    assert social_welfare(housing, Matching.from_pairs([])) == 0.0
    assert social_welfare(housing, Matching.from_pairs([(0, 0), (2, 1)])) == 9.0


def test_not_individually_rational_below_cost(housing):
    alloc = Allocation(Matching.from_pairs([(0, 0), (1, 1)]), np.array([7.0, 9.0]))
    assert not is_individually_rational(housing, alloc)
    assert not is_stable(housing, alloc)


def test_blocking_pair_found(housing, housing_suboptimal):
    assert is_individually_rational(housing, housing_suboptimal)
    assert find_blocking_pair(housing, housing_suboptimal) == (2, 1)
    assert not is_stable(housing, housing_suboptimal)


def test_stable_allocation(housing):
    alloc = Allocation(Matching.from_pairs([(0, 0), (2, 1)]), np.array([6.0, 12.0]))
    assert find_blocking_pair(housing, alloc) is None
    assert is_stable(housing, alloc)


@given(st.integers(0, 10_000), st.integers(0, 3))
@settings(max_examples=60, deadline=None)
def test_price_cancellation(seed, spread_case):
    """Total utility equals the matching's welfare for any price vector."""
    rng = np.random.default_rng(seed)
    market = helpers.random_market(rng, with_costs=bool(spread_case % 2))
    alloc = helpers.random_allocation(rng, market)
    prof = utilities(market, alloc)
    assert abs(prof.total - social_welfare(market, alloc.matching)) <= 1e-9


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_unmatched_price_is_irrelevant(seed):
    rng = np.random.default_rng(seed)
    market = helpers.random_market(rng, with_costs=True)
    alloc = helpers.random_allocation(rng, market)
    prof = utilities(market, alloc)
    matched = {j for _, j in alloc.matching.pairs}
    bumped = alloc.prices.copy()
    for j in range(market.n_sellers):
        if j not in matched:
            bumped[j] += 17.5
    prof2 = utilities(market, Allocation(alloc.matching, bumped))
    np.testing.assert_array_equal(prof.u, prof2.u)
    np.testing.assert_array_equal(prof.v, prof2.v)


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_stable_iff_zero_subset_instability(seed):
    rng = np.random.default_rng(seed)
    market = helpers.random_market(rng)
    alloc = helpers.random_allocation(rng, market)
    si = subset_instability(market, alloc)
    assert is_stable(market, alloc) == (si <= 1e-9)


def test_market_equality_and_immutability(housing):
    same = Market(housing.buyer_ids, housing.seller_ids, housing.h, housing.c)
    assert same == housing
    with pytest.raises(ValueError):
        housing.h[0, 0] = 99.0
