"""Two-phase simplex and the stabilizing-subsidy LP."""
from __future__ import annotations

from itertools import combinations

import numpy as np
import pytest

import helpers
from stablematch import (
    Allocation,
    LinearProgram,
    Matching,
    StructuralError,
    minimum_stabilizing_subsidy,
    subset_instability,
)
from stablematch import instances as lab
from stablematch.pricing import shapley_shubik_prices
from stablematch.simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, solve


def test_trivial_zero_objective():
    lp = LinearProgram([0.0], [[1.0]], (">=",), [0.0], goal="max")
    status, value, x = solve(lp)
    assert status == OPTIMAL
    assert value == pytest.approx(0.0)


def test_known_small_lp():
    # max 3x + 2y s.t. x + y <= 4, x <= 2
    lp = LinearProgram([3.0, 2.0], [[1.0, 1.0], [1.0, 0.0]], ("<=", "<="),
                       [4.0, 2.0], goal="max")
    status, value, x = solve(lp)
    assert status == OPTIMAL
    assert value == pytest.approx(10.0)
    np.testing.assert_allclose(x, [2.0, 2.0], atol=1e-7)


def test_infeasible():
    lp = LinearProgram([1.0], [[1.0]], ("<=",), [-1.0])
    assert solve(lp)[0] == INFEASIBLE


def test_unbounded():
    lp = LinearProgram([1.0], [[1.0]], (">=",), [0.0], goal="max")
    assert solve(lp)[0] == UNBOUNDED


def test_free_variable():
    lp = LinearProgram([1.0], [[1.0]], (">=",), [-5.0], free=(True,))
    status, value, x = solve(lp)
    assert status == OPTIMAL
    assert value == pytest.approx(-5.0)


def test_equality_constraints():
    lp = LinearProgram([1.0, 1.0], [[1.0, 2.0]], ("==",), [4.0])
    status, value, _ = solve(lp)
    assert status == OPTIMAL
    assert value == pytest.approx(2.0)  # x = (0, 2)


def test_degenerate_does_not_cycle():
    # Beale's classical cycling example; Bland's rule must terminate
    lp = LinearProgram(
        [-0.75, 150.0, -0.02, 6.0],
        [[0.25, -60.0, -0.04, 9.0], [0.5, -90.0, -0.02, 3.0], [0.0, 0.0, 1.0, 0.0]],
        ("<=", "<=", "<="),
        [0.0, 0.0, 1.0],
    )
    status, value, _ = solve(lp)
    assert status == OPTIMAL
    assert value == pytest.approx(-0.05, abs=1e-7)


def brute_force_lp(c, a, b, goal="max"):
    """Optimal bounded-feasible LP value via basic-solution enumeration.

    Considers every choice of active constraints (rows at equality plus
    variables at zero); valid for non-degenerate bounded problems with all
    '<=' rows.
    """
    m, n = a.shape
    eye = np.eye(n)
    systems = [(a[i], b[i]) for i in range(m)] + [(eye[j], 0.0) for j in range(n)]
    best = None
    for rows in combinations(range(len(systems)), n):
        mat = np.array([systems[r][0] for r in rows])
        rhs = np.array([systems[r][1] for r in rows])
        if abs(np.linalg.det(mat)) < 1e-9:
            continue
        x = np.linalg.solve(mat, rhs)
        if (x >= -1e-9).all() and (a @ x <= b + 1e-9).all():
            val = float(c @ x)
            if best is None or (val > best if goal == "max" else val < best):
                best = val
    return best


def test_matches_vertex_enumeration_on_random_lps():
    rng = np.random.default_rng(11)
    for _ in range(60):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(1, 9 - 1))
        a = rng.integers(-3, 6, size=(m, n)).astype(float)
        b = rng.integers(0, 9, size=m).astype(float)
        a = np.vstack([a, np.eye(n)])           # box rows keep it bounded
        b = np.concatenate([b, np.full(n, 10.0)])
        c = rng.integers(-5, 6, size=n).astype(float)
        lp = LinearProgram(c, a, ("<=",) * len(b), b, goal="max")
        status, value, _ = solve(lp)
        assert status == OPTIMAL
        expected = brute_force_lp(c, a, b)
        assert value == pytest.approx(expected, abs=1e-6)


def test_dimension_mismatch():
    with pytest.raises(StructuralError):
        LinearProgram([1.0, 2.0], [[1.0]], ("<=",), [1.0])


def test_subsidy_matches_worked_example(housing, housing_suboptimal):
    value, tau, eta = minimum_stabilizing_subsidy(housing, housing_suboptimal)
    assert value == pytest.approx(4.0, abs=1e-7)
    assert (tau >= -1e-9).all() and (eta >= -1e-9).all()


def test_subsidy_zero_for_stable(housing):
    value, _, _ = minimum_stabilizing_subsidy(housing, shapley_shubik_prices(housing))
    assert value == pytest.approx(0.0, abs=1e-7)


def test_subsidy_split_pair():
    market = lab.diagonal(0.5)
    alloc = Allocation(Matching.from_pairs([(0, 0)]), np.zeros(2))
    value, _, _ = minimum_stabilizing_subsidy(market, alloc)
    assert value == pytest.approx(0.5, abs=1e-7)


def test_subsidy_equals_subset_instability_sweep():
    rng = np.random.default_rng(23)
    for _ in range(40):
        market = helpers.random_market(rng)
        alloc = helpers.random_allocation(rng, market)
        value, _, _ = minimum_stabilizing_subsidy(market, alloc)
        assert value == pytest.approx(subset_instability(market, alloc), abs=1e-6)
