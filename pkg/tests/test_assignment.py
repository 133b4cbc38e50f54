"""Maximum-weight matching solver and its dual certificates."""
from __future__ import annotations

from itertools import permutations

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

import helpers
from stablematch import (
    Matching,
    StructuralError,
    core_point,
    max_weight_matching,
    optimal_value,
)
from stablematch import instances as lab


def brute_force_value(w: np.ndarray) -> float:
    """Best matching value by enumerating all row->column injections."""
    nb, ns = w.shape
    best = 0.0
    cols = list(range(ns))
    for size in range(min(nb, ns) + 1):
        for rows in permutations(range(nb), size):
            for chosen in permutations(cols, size):
                best = max(best, sum(w[r, c] for r, c in zip(rows, chosen)))
    return best


def test_housing_value_and_matching(housing):
    res = max_weight_matching(housing.surplus)
    assert res.value == pytest.approx(9.0, abs=1e-9)
    assert res.matching.sorted_pairs == ((0, 0), (2, 1))


def test_zero_matrix_empty_matching():
    res = max_weight_matching(np.zeros((3, 2)))
    assert res.value == 0.0
    assert len(res.matching) == 0


def test_split_pair_matrix():
    res = max_weight_matching(np.array([[0.5, 0.0], [0.0, 0.5]]))
    assert res.value == pytest.approx(1.0)
    assert res.matching.sorted_pairs == ((0, 0), (1, 1))


def test_negative_entries_never_matched():
    res = max_weight_matching(np.array([[-3.0, 2.0], [-1.0, -2.0]]))
    assert res.value == pytest.approx(2.0)
    assert res.matching.sorted_pairs == ((0, 1),)


def test_non_rectangular_rejected():
    with pytest.raises(StructuralError):
        max_weight_matching(np.zeros((2, 2, 2)))


def test_lexicographic_tie_breaking():
    res = max_weight_matching(np.ones((2, 2)))
    assert res.matching.sorted_pairs == ((0, 0), (1, 1))
    res = max_weight_matching(np.array([[5.0, 5.0]]))
    assert res.matching.sorted_pairs == ((0, 0),)
    # a zero-weight pair joins when that makes the sorted pair-set smaller
    res = max_weight_matching(np.array([[0.0, 0.0], [0.0, 1.0]]))
    assert res.matching.sorted_pairs == ((0, 0), (1, 1))


def _assert_certificate(w, res):
    assert (res.alpha >= -1e-9).all() and (res.beta >= -1e-9).all()
    slack = res.alpha[:, None] + res.beta[None, :] - w
    assert (slack >= -1e-9).all()
    matched_b = {i for i, _ in res.matching.pairs}
    matched_s = {j for _, j in res.matching.pairs}
    for i, j in res.matching.pairs:
        assert abs(res.alpha[i] + res.beta[j] - w[i, j]) <= 1e-9
    for i in range(w.shape[0]):
        if i not in matched_b:
            assert abs(res.alpha[i]) <= 1e-9
    for j in range(w.shape[1]):
        if j not in matched_s:
            assert abs(res.beta[j]) <= 1e-9
    assert abs(res.alpha.sum() + res.beta.sum() - res.value) <= 1e-9


def test_oracle_equivalence_and_certificates():
    rng = np.random.default_rng(7)
    for _ in range(200):
        nb = int(rng.integers(1, 5))
        ns = int(rng.integers(1, 5))
        w = rng.integers(0, 11, size=(nb, ns)).astype(float)
        res = max_weight_matching(w)
        assert res.value == pytest.approx(brute_force_value(w), abs=1e-9)
        rows, cols = linear_sum_assignment(w, maximize=True)
        assert res.value == pytest.approx(float(w[rows, cols].sum()), abs=1e-9)
        _assert_certificate(w, res)


def test_monotone_in_rows_and_columns():
    rng = np.random.default_rng(3)
    for _ in range(50):
        w = rng.integers(0, 9, size=(3, 3)).astype(float)
        base = max_weight_matching(w, canonical=False).value
        grown_row = np.vstack([w, rng.integers(0, 9, size=(1, 3))])
        grown_col = np.hstack([w, rng.integers(0, 9, size=(3, 1))])
        assert max_weight_matching(grown_row, canonical=False).value >= base - 1e-9
        assert max_weight_matching(grown_col, canonical=False).value >= base - 1e-9


def test_optimal_value_examples(housing):
    assert optimal_value(housing) == pytest.approx(9.0)
    assert optimal_value(lab.diagonal(0.3)) == pytest.approx(1.0)
    single = lab.random_market(1, 1, seed=1, low=5, high=5)
    assert optimal_value(single) == pytest.approx(5.0)


def test_core_point_housing(housing):
    prof = core_point(housing)
    a = housing.surplus
    assert prof.u[0] + prof.v[0] == pytest.approx(4.0, abs=1e-9)
    assert prof.u[2] + prof.v[1] == pytest.approx(5.0, abs=1e-9)
    assert prof.u[1] == pytest.approx(0.0, abs=1e-9)
    assert prof.total == pytest.approx(9.0, abs=1e-9)
    assert (prof.u[:, None] + prof.v[None, :] >= a - 1e-9).all()


def test_core_point_zero_market():
    m = lab.random_market(2, 2, seed=0, low=0, high=0)
    prof = core_point(m)
    assert prof.total == 0.0


def test_core_point_split_pair():
    prof = core_point(lab.diagonal(0.5))
    assert prof.u[0] + prof.v[0] == pytest.approx(0.5, abs=1e-9)
    assert prof.u[1] + prof.v[1] == pytest.approx(0.5, abs=1e-9)
