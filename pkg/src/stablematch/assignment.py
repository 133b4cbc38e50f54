"""Exact maximum-weight bipartite matching with certifying dual potentials.

The solver runs the Kuhn-Munkres (Hungarian) algorithm on the weight matrix
padded to square with zeros.  Besides the matching it returns dual vectors
``alpha`` (buyers) and ``beta`` (sellers) satisfying

* feasibility:          alpha_i + beta_j >= w[i, j] for every pair,
* complementary slackness on matched pairs and on unmatched agents,
* strong duality:       sum(alpha) + sum(beta) == matching value,

which certifies optimality without re-solving.  Negative-weight edges are
never matched (matching one is never profitable), so the value is always
non-negative and the empty matching is a valid optimum of the zero matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StructuralError
from .model import Market, Matching, UtilityProfile

_EPS = 1e-12
_CERT_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class MatchingResult:
    """Optimal matching plus the dual potentials certifying it."""

    matching: Matching
    value: float
    alpha: np.ndarray
    beta: np.ndarray


def _hungarian_square(w: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Kuhn-Munkres on a square non-negative matrix.

    Returns (col_of_row, alpha, beta) with a perfect matching.  Labels start
    at alpha = row maxima, beta = 0 and stay dual-feasible; each phase grows
    an alternating tree, shifting labels by the minimum slack until an
    augmenting path appears.
    """
    n = w.shape[0]
    alpha = w.max(axis=1).astype(float) if n else np.zeros(0)
    beta = np.zeros(n)
    row_of_col = np.full(n, -1)
    col_of_row = np.full(n, -1)
    for root in range(n):
        in_tree_row = np.zeros(n, dtype=bool)
        in_tree_col = np.zeros(n, dtype=bool)
        in_tree_row[root] = True
        slack = alpha[root] + beta - w[root]
        slack_row = np.full(n, root)
        while True:
            masked = np.where(in_tree_col, np.inf, slack)
            j = int(masked.argmin())
            delta = masked[j]
            if delta > _EPS:
                alpha[in_tree_row] -= delta
                beta[in_tree_col] += delta
                slack[~in_tree_col] -= delta
            in_tree_col[j] = True
            r = row_of_col[j]
            if r == -1:
                # augment: flip matched edges along the alternating path
                while j != -1:
                    r = slack_row[j]
                    prev = col_of_row[r]
                    row_of_col[j] = r
                    col_of_row[r] = j
                    j = prev
                break
            in_tree_row[r] = True
            new_slack = alpha[r] + beta - w[r]
            better = (~in_tree_col) & (new_slack < slack)
            slack[better] = new_slack[better]
            slack_row[better] = r
    return col_of_row, alpha, beta


def _solve_value(weights: np.ndarray) -> float:
    """Optimal matching value only (no canonicalization, no certification)."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2:
        raise StructuralError("weight matrix must be two-dimensional")
    nb, ns = w.shape
    if nb == 0 or ns == 0:
        return 0.0
    n = max(nb, ns)
    sq = np.zeros((n, n))
    sq[:nb, :ns] = np.maximum(w, 0.0)
    col_of_row, _, _ = _hungarian_square(sq)
    return float(sum(sq[r, col_of_row[r]] for r in range(n)))


def _canonical_pairs(weights: np.ndarray, opt: float) -> list[tuple[int, int]]:
    """Lexicographically smallest pair-set among all optimal matchings.

    Builds the sorted pair list greedily: stop as soon as the forced pairs
    already reach the optimum (a shorter sorted tuple precedes any
    extension), otherwise force the smallest next pair that still extends to
    an optimal matching.
    """
    nb, ns = weights.shape
    pairs: list[tuple[int, int]] = []
    used_rows: set[int] = set()
    used_cols: set[int] = set()
    base = 0.0
    last = (-1, ns)
    while opt - base > 1e-9:
        chosen = None
        for i in range(nb):
            for j in range(ns):
                if (i, j) <= last or i in used_rows or j in used_cols:
                    continue
                if weights[i, j] < 0:
                    continue
                rows = [r for r in range(nb) if r != i and r not in used_rows]
                cols = [s for s in range(ns) if s != j and s not in used_cols]
                rest = _solve_value(weights[np.ix_(rows, cols)]) if rows and cols else 0.0
                if base + weights[i, j] + rest >= opt - 1e-9:
                    chosen = (i, j)
                    break
            if chosen:
                break
        if chosen is None:  # cannot happen: an optimal extension always exists
            raise AssertionError("canonicalization failed to extend to the optimum")
        pairs.append(chosen)
        used_rows.add(chosen[0])
        used_cols.add(chosen[1])
        base += weights[chosen]
        last = chosen
    return pairs


def _certify(w: np.ndarray, result: MatchingResult) -> None:
    """Raise if the duals fail to certify the returned matching."""
    alpha, beta = result.alpha, result.beta
    if (alpha < -_CERT_TOL).any() or (beta < -_CERT_TOL).any():
        raise AssertionError("negative dual potential")
    slack = alpha[:, None] + beta[None, :] - w
    if (slack < -_CERT_TOL).any():
        raise AssertionError("dual infeasible")
    matched_rows = set()
    matched_cols = set()
    for i, j in result.matching.pairs:
        if abs(alpha[i] + beta[j] - w[i, j]) > _CERT_TOL:
            raise AssertionError("complementary slackness violated on matched pair")
        matched_rows.add(i)
        matched_cols.add(j)
    for i in range(w.shape[0]):
        if i not in matched_rows and abs(alpha[i]) > _CERT_TOL:
            raise AssertionError("unmatched buyer with positive potential")
    for j in range(w.shape[1]):
        if j not in matched_cols and abs(beta[j]) > _CERT_TOL:
            raise AssertionError("unmatched seller with positive potential")
    if abs(alpha.sum() + beta.sum() - result.value) > _CERT_TOL:
        raise AssertionError("strong duality gap")


def max_weight_matching(weights, canonical: bool = True) -> MatchingResult:
    """Maximum-weight matching of a dense weight matrix, with dual certificate.

    Ties between optimal matchings are broken toward the lexicographically
    smallest pair-set so repeated runs are reproducible.  Pass
    ``canonical=False`` to skip that refinement when only the value and a
    valid optimum are needed.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2:
        raise StructuralError("weight matrix must be two-dimensional")
    if not np.isfinite(w).all():
        raise StructuralError("weights must be finite")
    nb, ns = w.shape
    if nb == 0 or ns == 0:
        empty = MatchingResult(Matching(frozenset()), 0.0, np.zeros(nb), np.zeros(ns))
        return empty
    n = max(nb, ns)
    sq = np.zeros((n, n))
    sq[:nb, :ns] = np.maximum(w, 0.0)
    col_of_row, alpha_sq, beta_sq = _hungarian_square(sq)
    value = float(sum(sq[r, col_of_row[r]] for r in range(n)))
    pad_alpha = alpha_sq[nb:]
    pad_beta = beta_sq[ns:]
    if (np.abs(pad_alpha) > _CERT_TOL).any() or (np.abs(pad_beta) > _CERT_TOL).any():
        raise AssertionError("padding rows/columns received non-zero potentials")
    alpha = alpha_sq[:nb].copy()
    beta = beta_sq[:ns].copy()
    if canonical:
        pairs = _canonical_pairs(w, value)
    else:
        pairs = [
            (r, int(col_of_row[r]))
            for r in range(nb)
            if col_of_row[r] < ns and w[r, col_of_row[r]] > 0
        ]
    result = MatchingResult(Matching(frozenset(pairs)), value, alpha, beta)
    _certify(w, result)
    return result


def optimal_value(market: Market) -> float:
    """Best achievable social welfare of the market (``OPT``)."""
    return _solve_value(market.surplus)


def core_point(market: Market) -> UtilityProfile:
    """A core utility profile: the dual potentials of an optimal matching.

    Satisfies ``alpha_i + beta_j >= a[i, j]`` for every pair and sums to the
    optimal social welfare, hence supports a stable allocation.
    """
    res = max_weight_matching(market.surplus, canonical=False)
    return UtilityProfile(res.alpha, res.beta)
