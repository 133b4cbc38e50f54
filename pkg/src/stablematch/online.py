"""Online assignment games: arrival state machines and online algorithms.

Two arrival models.  Under edge arrival the graph starts empty and edges
appear one by one; each must be irrevocably accepted (at a price) or
rejected.  Under vertex arrival the sellers are present from the start and
buyers appear one by one; each arriving buyer may be matched to a free
neighbor at a price.  With free disposal (vertex model only) an arriving
buyer may displace a seller's current partner, who ends up unmatched.

Algorithms draw randomness through a small source object so the same code
can be sampled (Monte Carlo) or exhaustively enumerated (exact evaluation).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, StructuralError
from .model import Allocation, Market, Matching

EDGE = "edge"
VERTEX = "vertex"

_EPS = 1e-12


def edges_of(market: Market) -> tuple[tuple[int, int], ...]:
    """Positive-surplus pairs in row-major order: the market's edge set."""
    a = market.surplus
    return tuple((int(i), int(j)) for i, j in np.argwhere(a > 0))


def is_vertex_weighted(market: Market) -> bool:
    """True when each seller's positive surpluses agree across buyers."""
    a = market.surplus
    for j in range(market.n_sellers):
        vals = a[a[:, j] > 0, j]
        if vals.size and (np.abs(vals - vals[0]) > _EPS).any():
            return False
    return True


@dataclass(frozen=True, eq=False)
class OnlineInstance:
    """A market plus its arrival script.

    ``order`` lists (buyer, seller) pairs under edge arrival (a permutation
    of the market's positive-surplus edges) or buyer indices under vertex
    arrival (a permutation of all buyers).
    """

    market: Market
    model: str
    order: tuple
    free_disposal: bool = False
    vertex_weighted: bool = field(init=False, default=False)

    def __post_init__(self):
        if self.model not in (EDGE, VERTEX):
            raise StructuralError(f"unknown arrival model {self.model!r}")
        if self.model == EDGE:
            if self.free_disposal:
                raise StructuralError("free disposal applies to vertex arrival only")
            order = tuple((int(i), int(j)) for i, j in self.order)
            if sorted(order) != sorted(edges_of(self.market)):
                raise StructuralError(
                    "edge arrival order must be a permutation of the market's "
                    "positive-surplus edges"
                )
        else:
            order = tuple(int(i) for i in self.order)
            if sorted(order) != list(range(self.market.n_buyers)):
                raise StructuralError(
                    "vertex arrival order must be a permutation of the buyers"
                )
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "vertex_weighted", is_vertex_weighted(self.market))

    def __eq__(self, other) -> bool:
        if not isinstance(other, OnlineInstance):
            return NotImplemented
        return (
            self.market == other.market
            and self.model == other.model
            and self.order == other.order
            and self.free_disposal == other.free_disposal
        )


def as_vertex_instance(
    market: Market, order: Optional[Sequence[int]] = None, free_disposal: bool = False
) -> OnlineInstance:
    """Wrap an offline market as a vertex-arrival instance (buyers in order)."""
    if order is None:
        order = range(market.n_buyers)
    return OnlineInstance(market, VERTEX, tuple(order), free_disposal)


class SamplingSource:
    """Randomness source backed by a numpy generator (Monte Carlo mode)."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def choice(self, probs: Sequence[float]) -> int:
        p = np.asarray(probs, dtype=float)
        return int(self.rng.choice(len(p), p=p / p.sum()))

    def uniform(self, grid_points: int) -> float:
        return float(self.rng.random())


class OnlineState:
    """Mutable simulation state; reveals only what has already arrived."""

    def __init__(self, instance: OnlineInstance, trace: Optional[list] = None):
        self.instance = instance
        self.market = instance.market
        self.prices = instance.market.c.copy()
        self.buyer_of: dict[int, int] = {}
        self.seller_of: dict[int, int] = {}
        self.arrived_buyers: set[int] = set()
        self.arrived_edges: set[tuple[int, int]] = set()
        self.ranks: Optional[np.ndarray] = None
        self.trace = trace

    def _record(self, event: tuple) -> None:
        if self.trace is not None:
            self.trace.append(event)

    def arrive_buyer(self, i: int) -> None:
        self.arrived_buyers.add(i)

    def arrive_edge(self, edge: tuple[int, int]) -> None:
        self.arrived_edges.add(edge)

    def surplus_row(self, i: int) -> np.ndarray:
        if i not in self.arrived_buyers:
            raise StructuralError(f"buyer {i} has not arrived yet")
        return self.market.surplus[i]

    def edge_surplus(self, edge: tuple[int, int]) -> float:
        if edge not in self.arrived_edges:
            raise StructuralError(f"edge {edge} has not arrived yet")
        return float(self.market.surplus[edge])

    def assign(self, i: int, j: int, price: float) -> None:
        if i in self.seller_of:
            raise StructuralError(f"buyer {i} is already matched")
        if j in self.buyer_of:
            if not self.instance.free_disposal:
                raise StructuralError(f"seller {j} is already matched")
            displaced = self.buyer_of[j]
            del self.seller_of[displaced]
            self._record(("displace", displaced, j))
        self.buyer_of[j] = i
        self.seller_of[i] = j
        self.prices[j] = price
        self._record(("match", i, j, float(price)))

    def skip(self, i) -> None:
        self._record(("skip", i))

    def allocation(self) -> Allocation:
        prices = self.prices.copy()
        for j in range(self.market.n_sellers):
            if j not in self.buyer_of:
                prices[j] = self.market.c[j]
        return Allocation(Matching(frozenset(self.seller_of.items())), prices)


def _require_model(alg, instance: OnlineInstance) -> None:
    wanted = getattr(alg, "model", "any")
    if wanted != "any" and wanted != instance.model:
        raise ConfigError(
            f"algorithm {describe(alg)!r} runs under {wanted} arrival, "
            f"instance uses {instance.model}"
        )


def describe(alg) -> str:
    return getattr(alg, "tag", type(alg).__name__)


@dataclass(frozen=True)
class VertexGreedy:
    """Match each arriving buyer to its best free neighbor, at half prices.

    Ties go to the lowest seller index.  The matching ignores prices, so this
    doubles as plain greedy when only welfare is of interest.
    """

    tag: str = "greedy_half"
    model: str = VERTEX

    def run(self, instance: OnlineInstance, source, trace: Optional[list] = None) -> Allocation:
        state = OnlineState(instance, trace)
        for i in instance.order:
            state.arrive_buyer(i)
            row = state.surplus_row(i)
            free = [j for j in range(len(row)) if row[j] > 0 and j not in state.buyer_of]
            if not free:
                state.skip(i)
                continue
            j = max(free, key=lambda s: (row[s], -s))
            state.assign(i, j, instance.market.c[j] + row[j] / 2.0)
        return state.allocation()


def rank_threshold(y) -> np.ndarray:
    """Share of a pair's surplus the seller keeps at rank value ``y``."""
    return np.exp(np.asarray(y, dtype=float) - 1.0)


@dataclass(frozen=True)
class Ranking:
    """Perturbed greedy with random seller ranks and rank-based prices.

    Each seller draws ``y ~ U[0, 1]``; an arriving buyer takes the free
    neighbor maximizing ``a * (1 - e^(y-1))`` when that maximum is positive,
    paying ``c + e^(y-1) * a``.  Exact enumeration discretizes each rank to
    ``grid_points`` quantile midpoints.
    """

    grid_points: int = 32
    tag: str = "ranking"
    model: str = VERTEX

    def run(self, instance: OnlineInstance, source, trace: Optional[list] = None) -> Allocation:
        if not instance.vertex_weighted:
            raise ConfigError("ranking requires a vertex-weighted instance")
        y = np.array(
            [source.uniform(self.grid_points) for _ in range(instance.market.n_sellers)]
        )
        return self.run_with_ranks(instance, y, trace)

    def run_with_ranks(
        self, instance: OnlineInstance, y, trace: Optional[list] = None
    ) -> Allocation:
        y = np.asarray(y, dtype=float)
        g = rank_threshold(y)
        state = OnlineState(instance, trace)
        if state.trace is not None:
            state.ranks = y
        for i in instance.order:
            state.arrive_buyer(i)
            row = state.surplus_row(i)
            free = [j for j in range(len(row)) if row[j] > 0 and j not in state.buyer_of]
            if not free:
                state.skip(i)
                continue
            # scores are non-negative (thresholds stay within [1/e, 1]), so a
            # neighbor is always taken; at the y = 1 boundary the seller
            # simply keeps the whole surplus
            j = max(free, key=lambda s: (row[s] * (1.0 - g[s]), -s))
            state.assign(i, j, instance.market.c[j] + g[j] * row[j])
        return state.allocation()

    def matching_for_rank_order(
        self, instance: OnlineInstance, rank_of_seller: Sequence[int]
    ) -> Matching:
        """Matching produced when only the order of the ranks matters.

        Valid on instances whose positive surpluses all share one value: the
        perturbed-greedy argmax then reduces to "lowest rank wins".
        """
        pairs = []
        taken: set[int] = set()
        a = instance.market.surplus
        for i in instance.order:
            free = [j for j in range(instance.market.n_sellers)
                    if a[i, j] > 0 and j not in taken]
            if not free:
                continue
            j = min(free, key=lambda s: rank_of_seller[s])
            taken.add(j)
            pairs.append((i, j))
        return Matching(frozenset(pairs))


@dataclass(frozen=True)
class GreedyFreeDisposal:
    """Reassigning greedy for edge-weighted vertex arrival with free disposal.

    An arriving buyer takes the seller with the largest strictly positive
    marginal gain (its surplus with the buyer minus the surplus currently
    assigned to it), displacing the incumbent.  Deterministic ties keep the
    incumbent (prefer an unmatched seller, then lowest index);
    ``random_ties=True`` flips a fair coin over the tied sellers instead.
    New pairs are priced at half surplus.
    """

    random_ties: bool = False
    model: str = VERTEX

    @property
    def tag(self) -> str:
        return "greedy_free_disposal_coin" if self.random_ties else "greedy_free_disposal"

    def run(self, instance: OnlineInstance, source, trace: Optional[list] = None) -> Allocation:
        if not instance.free_disposal:
            raise ConfigError("greedy with reassignment requires free disposal")
        a = instance.market.surplus
        state = OnlineState(instance, trace)
        for i in instance.order:
            state.arrive_buyer(i)
            row = state.surplus_row(i)
            gains = {}
            for j in range(len(row)):
                if row[j] <= 0:
                    continue
                held = a[state.buyer_of[j], j] if j in state.buyer_of else 0.0
                gains[j] = row[j] - held
            best = max(gains.values(), default=0.0)
            if best <= _EPS:
                state.skip(i)
                continue
            tied = sorted(j for j, gain in gains.items() if gain >= best - _EPS)
            if self.random_ties and len(tied) > 1:
                j = tied[source.choice([1.0 / len(tied)] * len(tied))]
            else:
                j = min(tied, key=lambda s: (s in state.buyer_of, s))
            state.assign(i, j, instance.market.c[j] + row[j] / 2.0)
        return state.allocation()


@dataclass(frozen=True)
class EdgeGreedy:
    """Accept every arriving edge whose endpoints are still free.

    The buyer keeps ``buyer_share`` of the surplus (0.5 = half prices).  Pass
    ``share_lottery`` as ((share, prob), ...) to randomize the split per
    accepted edge.
    """

    buyer_share: float = 0.5
    share_lottery: Optional[tuple[tuple[float, float], ...]] = None
    tag: str = "edge_greedy"
    model: str = EDGE

    def __post_init__(self):
        if not 0.0 <= self.buyer_share <= 1.0:
            raise ConfigError("buyer_share must lie in [0, 1]")
        if self.share_lottery is not None:
            probs = [p for _, p in self.share_lottery]
            if abs(sum(probs) - 1.0) > 1e-9 or any(p < 0 for p in probs):
                raise ConfigError("share lottery probabilities must sum to 1")

    def run(self, instance: OnlineInstance, source, trace: Optional[list] = None) -> Allocation:
        state = OnlineState(instance, trace)
        for edge in instance.order:
            state.arrive_edge(edge)
            i, j = edge
            if i in state.seller_of or j in state.buyer_of:
                state.skip(edge)
                continue
            surplus = state.edge_surplus(edge)
            if surplus <= 0:
                state.skip(edge)
                continue
            if self.share_lottery is not None:
                share = self.share_lottery[source.choice([p for _, p in self.share_lottery])][0]
            else:
                share = self.buyer_share
            state.assign(i, j, instance.market.c[j] + (1.0 - share) * surplus)
        return state.allocation()


@dataclass(frozen=True, eq=False)
class Lottery:
    """Evaluation helper: draw one of several fixed allocations.

    Ignores the arrival script; useful for exercising the ex-post/ex-ante/
    average machinery on hand-built distributions.
    """

    outcomes: tuple[tuple[float, Allocation], ...]
    tag: str = "lottery"
    model: str = "any"

    def __post_init__(self):
        probs = [p for p, _ in self.outcomes]
        if abs(sum(probs) - 1.0) > 1e-9 or any(p < 0 for p in probs):
            raise StructuralError("lottery probabilities must sum to 1")

    def run(self, instance: OnlineInstance, source, trace: Optional[list] = None) -> Allocation:
        idx = source.choice([p for p, _ in self.outcomes])
        return self.outcomes[idx][1]


@dataclass(frozen=True)
class HalfPriced:
    """Wrap a matching algorithm, overriding its prices with half prices."""

    inner: object

    @property
    def tag(self) -> str:
        return f"half({describe(self.inner)})"

    @property
    def model(self) -> str:
        return getattr(self.inner, "model", "any")

    def run(self, instance: OnlineInstance, source, trace: Optional[list] = None) -> Allocation:
        alloc = self.inner.run(instance, source, trace)
        a = instance.market.surplus
        prices = instance.market.c.copy()
        for i, j in alloc.matching.pairs:
            prices[j] = instance.market.c[j] + a[i, j] / 2.0
        return Allocation(alloc.matching, prices)


def half_wrapper(alg) -> HalfPriced:
    """Same matching decisions, prices overridden with half prices."""
    return HalfPriced(alg)


def simulate(instance: OnlineInstance, alg, seed: int = 0) -> Allocation:
    """Run an algorithm on an instance; deterministic given (instance, alg, seed)."""
    _require_model(alg, instance)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return alg.run(instance, SamplingSource(rng))


def simulate_with_trace(
    instance: OnlineInstance, alg, seed: int = 0
) -> tuple[Allocation, list]:
    """Like :func:`simulate`, also returning the ordered decision events."""
    _require_model(alg, instance)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    trace: list = []
    alloc = alg.run(instance, SamplingSource(rng), trace)
    return alloc, trace


ALGORITHMS = {
    "greedy": VertexGreedy(),
    "greedy-half": VertexGreedy(),
    "ranking": Ranking(),
    "greedy-fd": GreedyFreeDisposal(),
    "greedy-fd-coin": GreedyFreeDisposal(random_ties=True),
    "edge-greedy": EdgeGreedy(),
}


def algorithm_by_name(name: str):
    try:
        return ALGORITHMS[name]
    except KeyError:
        raise ConfigError(
            f"unknown algorithm {name!r}; choose from {sorted(ALGORITHMS)}"
        ) from None
