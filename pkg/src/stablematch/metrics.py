"""Non-binary stability metrics for allocations on sub-optimal matchings.

Three scores, each calibrated so that 1 means "as good as stable":

* ``optimality_ratio`` -- realized welfare over the best achievable (global,
  price-independent).
* ``stability_index`` -- one minus subset instability over the optimum, where
  subset instability is the largest shortfall any sub-coalition could close
  by rematching internally (global, price-sensitive).
* ``kappa`` -- the worst pair's covered fraction of its own surplus (local:
  an allocation is only as stable as its most aggrieved pair).

Brute-force oracles for the latter two are provided for cross-checking on
small instances; they enumerate sub-coalitions and matchings literally.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .assignment import _solve_value, optimal_value
from .errors import CapacityError, DomainError
from .model import (
    TOL,
    Allocation,
    Market,
    Matching,
    is_individually_rational,
    social_welfare,
    utilities,
)

_ORACLE_MAX_SIDE = 4


@dataclass(frozen=True, eq=False)
class MetricReport:
    """All three metrics of one allocation, plus context flags."""

    lambda_: float
    si: float
    norm_si: float
    kappa: Optional[float]
    kappa_raw: Optional[float]
    opt: float
    ir: bool


def optimality_ratio(market: Market, matching: Matching) -> float:
    """Realized social welfare divided by the optimum; 1 on a zero market."""
    opt = optimal_value(market)
    if opt <= TOL:
        return 1.0
    return social_welfare(market, matching) / opt


def si_from_utilities(market: Market, u: np.ndarray, v: np.ndarray) -> float:
    """Subset instability of a utility profile.

    Reduces the maximization over sub-coalitions and rematchings to one
    max-weight matching: unmatched members of the best coalition are exactly
    the agents with negative utility, and each candidate rematch pays its
    surplus minus the utilities it absorbs.  The empty coalition is allowed,
    so the result is never negative.
    """
    a = market.surplus
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    u_neg = np.maximum(0.0, -u)
    v_neg = np.maximum(0.0, -v)
    w = a - u[:, None] - v[None, :] - u_neg[:, None] - v_neg[None, :]
    return float(u_neg.sum() + v_neg.sum() + _solve_value(w))


def subset_instability(market: Market, alloc: Allocation) -> float:
    """Largest welfare shortfall any sub-coalition could close by rematching."""
    prof = utilities(market, alloc)
    return si_from_utilities(market, prof.u, prof.v)


def stability_index(market: Market, alloc: Allocation) -> float:
    """1 - SI/OPT; 1 on a zero market."""
    opt = optimal_value(market)
    if opt <= TOL:
        return 1.0
    return 1.0 - subset_instability(market, alloc) / opt


def kappa_from_utilities(
    market: Market, u: np.ndarray, v: np.ndarray
) -> Optional[float]:
    """Worst covered-surplus fraction over positive-surplus pairs, capped at 1.

    None when no pair has positive surplus (the ratio is undefined).  Ratios
    may be negative when the utilities are not individually rational.
    """
    raw = kappa_raw_from_utilities(market, u, v)
    return None if raw is None else min(1.0, raw)


def kappa_raw_from_utilities(
    market: Market, u: np.ndarray, v: np.ndarray
) -> Optional[float]:
    a = market.surplus
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    mask = a > 0
    if not mask.any():
        return None
    ratios = (u[:, None] + v[None, :])[mask] / a[mask]
    return float(ratios.min())


def _require_ir(market: Market, alloc: Allocation, tol: float) -> None:
    prof = utilities(market, alloc)
    for i, ui in enumerate(prof.u):
        if ui < -tol:
            raise DomainError(
                f"allocation is not individually rational: buyer "
                f"{market.buyer_ids[i]!r} has utility {ui}"
            )
    for j, vj in enumerate(prof.v):
        if vj < -tol:
            raise DomainError(
                f"allocation is not individually rational: seller "
                f"{market.seller_ids[j]!r} has utility {vj}"
            )


def kappa(market: Market, alloc: Allocation, tol: float = TOL) -> Optional[float]:
    """Approximate-core ratio of an individually rational allocation.

    Raises DomainError on non-IR input; returns None when undefined (no pair
    with positive surplus).  Capped at 1.
    """
    _require_ir(market, alloc, tol)
    prof = utilities(market, alloc)
    return kappa_from_utilities(market, prof.u, prof.v)


def kappa_raw(market: Market, alloc: Allocation, tol: float = TOL) -> Optional[float]:
    """Uncapped variant of :func:`kappa`, for debugging."""
    _require_ir(market, alloc, tol)
    prof = utilities(market, alloc)
    return kappa_raw_from_utilities(market, prof.u, prof.v)


def _guard_size(market: Market, what: str) -> None:
    if max(market.n_buyers, market.n_sellers) > _ORACLE_MAX_SIDE:
        raise CapacityError(
            f"{what} enumerates all sub-coalitions and is limited to "
            f"{_ORACLE_MAX_SIDE} agents per side"
        )


def _all_matchings(rows: tuple[int, ...], cols: tuple[int, ...]):
    """Yield every matching (as a tuple of pairs) between the given indices."""
    if not rows:
        yield ()
        return
    first, rest = rows[0], rows[1:]
    for sub in _all_matchings(rest, cols):
        yield sub  # first stays unmatched
    for k, j in enumerate(cols):
        for sub in _all_matchings(rest, cols[:k] + cols[k + 1:]):
            yield ((first, j),) + sub


def _subsets(n: int):
    items = tuple(range(n))
    for size in range(n + 1):
        yield from combinations(items, size)


def brute_force_si(market: Market, alloc: Allocation) -> float:
    """Definitional subset instability: enumerate every sub-coalition and
    every internal matching.  Size-guarded oracle for the reduction."""
    _guard_size(market, "brute_force_si")
    prof = utilities(market, alloc)
    a = market.surplus
    best = 0.0  # empty coalition
    for rows in _subsets(market.n_buyers):
        for cols in _subsets(market.n_sellers):
            held = prof.u[list(rows)].sum() + prof.v[list(cols)].sum()
            for mu in _all_matchings(rows, cols):
                achievable = sum(a[i, j] for i, j in mu)
                best = max(best, achievable - held)
    return float(best)


def kappa_submarket_oracle(
    market: Market, alloc: Allocation, tol: float = TOL
) -> Optional[float]:
    """Worst ratio of held-to-achievable welfare over all sub-coalitions.

    Equals :func:`kappa` on individually rational allocations; kept as an
    independent enumeration for cross-checks.  None when no sub-coalition
    can achieve positive welfare.
    """
    _guard_size(market, "kappa_submarket_oracle")
    _require_ir(market, alloc, tol)
    prof = utilities(market, alloc)
    a = market.surplus
    best: Optional[float] = None
    for rows in _subsets(market.n_buyers):
        for cols in _subsets(market.n_sellers):
            held = prof.u[list(rows)].sum() + prof.v[list(cols)].sum()
            for mu in _all_matchings(rows, cols):
                achievable = sum(a[i, j] for i, j in mu)
                if achievable > 1e-12:
                    ratio = held / achievable
                    if best is None or ratio < best:
                        best = ratio
    return best


def metric_report(market: Market, alloc: Allocation, tol: float = TOL) -> MetricReport:
    """Compute all three metrics of one allocation."""
    prof = utilities(market, alloc)
    opt = optimal_value(market)
    sw = social_welfare(market, alloc.matching)
    si = si_from_utilities(market, prof.u, prof.v)
    lam = 1.0 if opt <= TOL else sw / opt
    norm_si = 1.0 if opt <= TOL else 1.0 - si / opt
    ir = is_individually_rational(market, alloc, tol)
    raw = kappa_raw_from_utilities(market, prof.u, prof.v)
    capped = None if raw is None else min(1.0, raw)
    return MetricReport(
        lambda_=lam, si=si, norm_si=norm_si, kappa=capped, kappa_raw=raw,
        opt=opt, ir=ir,
    )
