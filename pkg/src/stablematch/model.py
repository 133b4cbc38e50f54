"""Two-sided market model: markets, matchings, allocations, utilities.

A market pairs buyers with sellers.  Buyer ``i`` values seller ``j``'s good at
``h[i, j]`` while the seller values it at ``c[j]``; trading at price ``p``
gives the buyer ``h - p`` and the seller ``p - c``, so the pair jointly
creates surplus ``a[i, j] = h[i, j] - c[j]`` regardless of the price.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import StructuralError

TOL = 1e-9

log = logging.getLogger("stablematch")


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Market:
    """Immutable buyer/seller market with valuations ``h`` and costs ``c``.

    Pairs whose raw surplus would be negative are normalized away at
    construction: the buyer valuation is lifted to the seller cost so the
    surplus is exactly zero (such a pair would never trade anyway).  The
    clamped index pairs are recorded on ``clamped_pairs``.
    """

    buyer_ids: tuple[str, ...]
    seller_ids: tuple[str, ...]
    h: np.ndarray
    c: np.ndarray
    clamped_pairs: tuple[tuple[int, int], ...] = field(init=False, default=())

    def __post_init__(self):
        buyers = tuple(str(b) for b in self.buyer_ids)
        sellers = tuple(str(s) for s in self.seller_ids)
        h = np.array(self.h, dtype=float)
        c = np.array(self.c, dtype=float)
        if h.ndim != 2 or h.shape != (len(buyers), len(sellers)):
            raise StructuralError(
                f"valuation matrix shape {h.shape} does not match "
                f"{len(buyers)} buyers x {len(sellers)} sellers"
            )
        if c.shape != (len(sellers),):
            raise StructuralError(f"cost vector shape {c.shape} does not match sellers")
        if not (np.isfinite(h).all() and np.isfinite(c).all()):
            raise StructuralError("valuations and costs must be finite")
        if (h < 0).any() or (c < 0).any():
            raise StructuralError("valuations and costs must be non-negative")
        mask = h - c[None, :] < 0
        clamped = tuple((int(i), int(j)) for i, j in np.argwhere(mask))
        if clamped:
            h[mask] = np.broadcast_to(c, h.shape)[mask]
            log.info("clamped %d negative-surplus pairs to zero surplus: %s",
                     len(clamped), clamped)
        h.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "buyer_ids", buyers)
        object.__setattr__(self, "seller_ids", sellers)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "clamped_pairs", clamped)

    @property
    def n_buyers(self) -> int:
        return len(self.buyer_ids)

    @property
    def n_sellers(self) -> int:
        return len(self.seller_ids)

    @property
    def surplus(self) -> np.ndarray:
        """Pairwise surplus matrix ``a = h - c`` (non-negative by construction)."""
        return self.h - self.c[None, :]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Market):
            return NotImplemented
        return (
            self.buyer_ids == other.buyer_ids
            and self.seller_ids == other.seller_ids
            and np.array_equal(self.h, other.h)
            and np.array_equal(self.c, other.c)
        )

    def __hash__(self):
        return hash((self.buyer_ids, self.seller_ids, self.h.tobytes(), self.c.tobytes()))


def surplus_matrix(market: Market) -> np.ndarray:
    """Surplus each pair would create by trading: ``a[i, j] = h[i, j] - c[j]``."""
    return market.surplus


@dataclass(frozen=True)
class Matching:
    """A set of disjoint (buyer, seller) index pairs."""

    pairs: frozenset[tuple[int, int]]

    def __post_init__(self):
        pairs = frozenset((int(i), int(j)) for i, j in self.pairs)
        buyers = [i for i, _ in pairs]
        sellers = [j for _, j in pairs]
        if len(set(buyers)) != len(buyers) or len(set(sellers)) != len(sellers):
            raise StructuralError(f"matching is not injective: {sorted(pairs)}")
        if any(i < 0 or j < 0 for i, j in pairs):
            raise StructuralError("matching indices must be non-negative")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "Matching":
        return cls(frozenset(pairs))

    @property
    def sorted_pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.pairs))

    def seller_of(self, buyer: int) -> Optional[int]:
        for i, j in self.pairs:
            if i == buyer:
                return j
        return None

    def buyer_of(self, seller: int) -> Optional[int]:
        for i, j in self.pairs:
            if j == seller:
                return i
        return None

    def __len__(self) -> int:
        return len(self.pairs)


EMPTY_MATCHING = Matching(frozenset())


@dataclass(frozen=True, eq=False)
class Allocation:
    """A matching together with a seller price vector.

    Stored prices of unmatched sellers are ignored by every utility
    computation; the effective price of an unmatched seller is their cost.
    """

    matching: Matching
    prices: np.ndarray

    def __post_init__(self):
        prices = np.array(self.prices, dtype=float)
        if prices.ndim != 1:
            raise StructuralError("prices must be a vector indexed by seller")
        if not np.isfinite(prices).all():
            raise StructuralError("prices must be finite")
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Allocation):
            return NotImplemented
        return self.matching == other.matching and np.array_equal(self.prices, other.prices)

    def __hash__(self):
        return hash((self.matching, self.prices.tobytes()))


@dataclass(frozen=True, eq=False)
class UtilityProfile:
    """Realized utilities: ``u`` per buyer, ``v`` per seller."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", _frozen_array(self.u))
        object.__setattr__(self, "v", _frozen_array(self.v))

    @property
    def total(self) -> float:
        return float(self.u.sum() + self.v.sum())


def _check_matching(market: Market, matching: Matching) -> None:
    for i, j in matching.pairs:
        if i >= market.n_buyers or j >= market.n_sellers:
            raise StructuralError(
                f"pair ({i}, {j}) out of range for "
                f"{market.n_buyers}x{market.n_sellers} market"
            )


def utilities(market: Market, alloc: Allocation) -> UtilityProfile:
    """Utilities induced by an allocation.

    Matched buyer: ``h - p``; matched seller: ``p - c``; unmatched agents get
    zero (an unmatched seller's effective price is their cost).
    """
    _check_matching(market, alloc.matching)
    if alloc.prices.shape != (market.n_sellers,):
        raise StructuralError("price vector length does not match sellers")
    u = np.zeros(market.n_buyers)
    v = np.zeros(market.n_sellers)
    for i, j in alloc.matching.pairs:
        u[i] = market.h[i, j] - alloc.prices[j]
        v[j] = alloc.prices[j] - market.c[j]
    return UtilityProfile(u, v)


def social_welfare(market: Market, matching: Matching) -> float:
    """Total surplus created by the matched pairs (price-independent)."""
    _check_matching(market, matching)
    a = market.surplus
    return float(sum(a[i, j] for i, j in matching.pairs))


def is_individually_rational(market: Market, alloc: Allocation, tol: float = TOL) -> bool:
    """True when no agent would rather walk away (all utilities >= -tol)."""
    prof = utilities(market, alloc)
    return bool((prof.u >= -tol).all() and (prof.v >= -tol).all())


def find_blocking_pair(
    market: Market, alloc: Allocation, tol: float = TOL
) -> Optional[tuple[int, int]]:
    """First (buyer, seller) pair that could trade and make both strictly better off.

    A mutually improving price exists exactly when the pair's combined
    utility falls short of their surplus.
    """
    prof = utilities(market, alloc)
    a = market.surplus
    for i in range(market.n_buyers):
        for j in range(market.n_sellers):
            if prof.u[i] + prof.v[j] < a[i, j] - tol:
                return (i, j)
    return None


def is_stable(market: Market, alloc: Allocation, tol: float = TOL) -> bool:
    """Individually rational with no blocking pair."""
    return is_individually_rational(market, alloc, tol) and find_blocking_pair(
        market, alloc, tol
    ) is None
