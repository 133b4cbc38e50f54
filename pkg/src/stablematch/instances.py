"""Named instance families, adversarial constructions, and random generators.

Families (see ``generate``):

* ``housing``        -- the 3-buyer / 2-seller housing market used as the
                        worked example throughout the test suite.
* ``diagonal``       -- two disjoint pairs with complementary surpluses
                        ``kappa0`` and ``1 - kappa0``; matching only the small
                        pair scores well globally but leaves the other pair
                        fully aggrieved.
* ``edge_pair``      -- two edge-arrival instances sharing the first edge;
                        whichever side of the split the first match favors,
                        one of the two punishes it.
* ``vertex_pair``    -- two vertex-weighted gadgets: a flexible buyer
                        arrives first, then a buyer adjacent to only one
                        seller; no online rule wins on both.
* ``triangular``     -- n x n unit surpluses on the upper triangle, buyers
                        in nested-neighborhood order.
* ``adversary_begin``-- l buyers, each indifferent between a private pair of
                        sellers; the base of the free-disposal trap.
* ``adversary_full`` -- the trap sprung: probe an algorithm on the base,
                        then append high-surplus buyers on the sellers it
                        tends to pick.
* ``random``         -- seeded integer-surplus markets or online instances.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .model import Market
from .online import EDGE, VERTEX, OnlineInstance, simulate

FAMILIES = (
    "housing", "diagonal", "edge_pair", "vertex_pair", "triangular",
    "adversary_begin", "adversary_full", "random",
)


def housing() -> Market:
    """Three buyers, two sellers; optimal welfare 9 with Bob left out."""
    return Market(
        ("Alice", "Bob", "Claire"),
        ("Dori", "Edward"),
        [[10.0, 10.0], [6.0, 12.0], [6.0, 15.0]],
        [6.0, 10.0],
    )


def diagonal(kappa0: float) -> Market:
    """Surplus matrix [[kappa0, 0], [0, 1 - kappa0]] with zero costs."""
    if not 0.0 <= kappa0 < 1.0:
        raise ConfigError("kappa0 must lie in [0, 1)")
    return Market(
        ("a", "b"), ("alpha", "beta"),
        [[kappa0, 0.0], [0.0, 1.0 - kappa0]],
        [0.0, 0.0],
    )


def edge_pair() -> tuple[OnlineInstance, OnlineInstance]:
    """Two edge-arrival instances sharing first edge Alice-Dori (surplus 1).

    The second arrival is Bob-Dori in the first instance and Alice-Edward in
    the second; each has optimal welfare 1.
    """
    first = OnlineInstance(
        Market(("Alice", "Bob"), ("Dori",), [[1.0], [1.0]], [0.0]),
        EDGE, ((0, 0), (1, 0)),
    )
    second = OnlineInstance(
        Market(("Alice",), ("Dori", "Edward"), [[1.0, 1.0]], [0.0, 0.0]),
        EDGE, ((0, 0), (0, 1)),
    )
    return first, second


def vertex_pair() -> tuple[OnlineInstance, OnlineInstance]:
    """Two vertex-weighted gadgets with unit surpluses and optimal welfare 2.

    Buyer A (adjacent to both sellers) arrives first, then buyer B adjacent
    to the first seller (instance one) or the second (instance two).
    """
    one = OnlineInstance(
        Market(("A", "B"), ("alpha", "beta"), [[1.0, 1.0], [1.0, 0.0]], [0.0, 0.0]),
        VERTEX, (0, 1),
    )
    two = OnlineInstance(
        Market(("A", "B"), ("alpha", "beta"), [[1.0, 1.0], [0.0, 1.0]], [0.0, 0.0]),
        VERTEX, (0, 1),
    )
    return one, two


def triangular(n: int) -> OnlineInstance:
    """Unit surpluses on the upper triangle; buyer i neighbors sellers i..n-1."""
    if n < 1:
        raise ConfigError("n must be at least 1")
    h = np.triu(np.ones((n, n)))
    market = Market(
        tuple(f"b{i + 1}" for i in range(n)),
        tuple(f"s{j + 1}" for j in range(n)),
        h, np.zeros(n),
    )
    return OnlineInstance(market, VERTEX, tuple(range(n)))


def adversary_begin(W: float, l: int) -> OnlineInstance:
    """Base of the free-disposal trap: buyer ``A_k`` is indifferent between
    its private sellers ``alpha_k`` and ``beta_k`` (unit surpluses).

    ``W`` is the surplus the extension stage will attach; it does not appear
    in the base matrix but is validated here so both stages share parameters.
    """
    if l < 1:
        raise ConfigError("l must be at least 1")
    if W <= 1:
        raise ConfigError("W must exceed 1 for displacement to be profitable")
    h = np.zeros((l, 2 * l))
    for k in range(l):
        h[k, 2 * k] = 1.0
        h[k, 2 * k + 1] = 1.0
    market = Market(
        tuple(f"A{k + 1}" for k in range(l)),
        tuple(
            name for k in range(l) for name in (f"alpha{k + 1}", f"beta{k + 1}")
        ),
        h, np.zeros(2 * l),
    )
    return OnlineInstance(market, VERTEX, tuple(range(l)), free_disposal=True)


def build_adversary_full(
    alg, W: float, l: int, probe_trials: int = 200, seed: int = 0
) -> OnlineInstance:
    """Spring the trap: probe the algorithm on the base instance, then append
    buyers ``B_k`` with surplus ``W`` on whichever seller of pair ``k`` the
    probe saw matched more often (ties toward ``alpha_k``).
    """
    base = adversary_begin(W, l)
    counts = np.zeros((l, 2))  # per pair: matches of alpha_k, beta_k
    for t in range(probe_trials):
        alloc = simulate(base, alg, seed=_probe_seed(seed, t))
        for i, j in alloc.matching.pairs:
            counts[i, j % 2] += 1
    targets = [2 * k + (1 if counts[k, 1] > counts[k, 0] else 0) for k in range(l)]
    h = np.zeros((2 * l, 2 * l))
    h[:l, :] = base.market.h
    for k in range(l):
        h[l + k, targets[k]] = W
    market = Market(
        base.market.buyer_ids + tuple(f"B{k + 1}" for k in range(l)),
        base.market.seller_ids,
        h, np.zeros(2 * l),
    )
    return OnlineInstance(market, VERTEX, tuple(range(2 * l)), free_disposal=True)


def _probe_seed(seed: int, trial: int) -> int:
    # fold (seed, trial) into one non-negative int for simulate()
    return int(np.random.SeedSequence([seed, trial]).generate_state(1)[0])


def random_market(
    n_buyers: int, n_sellers: int, seed: int,
    low: int = 0, high: int = 10, vertex_weighted: bool = False,
) -> Market:
    """Seeded market with integer surpluses (costs zero, so h equals the
    surplus).  With ``vertex_weighted`` each seller has one weight shared by
    its random set of neighbors; at least one positive edge is guaranteed."""
    if n_buyers < 1 or n_sellers < 1:
        raise ConfigError("market needs at least one agent per side")
    if not 0 <= low <= high:
        raise ConfigError("need 0 <= low <= high")
    rng = np.random.default_rng([seed, n_buyers, n_sellers])
    while True:
        if vertex_weighted:
            weights = rng.integers(max(low, 1), high + 1, size=n_sellers)
            adjacency = rng.random((n_buyers, n_sellers)) < 0.6
            h = adjacency * weights[None, :]
        else:
            h = rng.integers(low, high + 1, size=(n_buyers, n_sellers))
        if (h > 0).any():
            break
    return Market(
        tuple(f"b{i + 1}" for i in range(n_buyers)),
        tuple(f"s{j + 1}" for j in range(n_sellers)),
        h.astype(float), np.zeros(n_sellers),
    )


def random_instance(
    n_buyers: int, n_sellers: int, seed: int, model: str = VERTEX,
    low: int = 0, high: int = 10, vertex_weighted: bool = False,
    free_disposal: bool = False,
) -> OnlineInstance:
    """Random market wrapped with a seeded random arrival order."""
    from .online import edges_of

    market = random_market(n_buyers, n_sellers, seed, low, high, vertex_weighted)
    rng = np.random.default_rng([seed, 0xA881])
    if model == EDGE:
        edges = list(edges_of(market))
        rng.shuffle(edges)
        order: tuple = tuple(edges)
    elif model == VERTEX:
        order = tuple(rng.permutation(n_buyers).tolist())
    else:
        raise ConfigError(f"unknown arrival model {model!r}")
    return OnlineInstance(market, model, order, free_disposal=free_disposal)


@dataclass(frozen=True)
class GeneratorSpec:
    """A family name plus its parameters, as used by the CLI."""

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(
                f"unknown family {self.family!r}; choose from {FAMILIES}"
            )


def generate(spec: GeneratorSpec):
    """Build the instance a GeneratorSpec describes (Market or OnlineInstance)."""
    p = dict(spec.params)
    if spec.family == "housing":
        _no_extra(p)
        return housing()
    if spec.family == "diagonal":
        kappa0 = float(_take(p, "kappa0"))
        _no_extra(p)
        return diagonal(kappa0)
    if spec.family == "edge_pair":
        return edge_pair()[_pair_index(p)]
    if spec.family == "vertex_pair":
        return vertex_pair()[_pair_index(p)]
    if spec.family == "triangular":
        n = int(_take(p, "n"))
        _no_extra(p)
        return triangular(n)
    if spec.family == "adversary_begin":
        w, l = float(_take(p, "W")), int(_take(p, "l"))
        _no_extra(p)
        return adversary_begin(w, l)
    if spec.family == "adversary_full":
        from .online import algorithm_by_name

        alg = algorithm_by_name(str(_take(p, "alg")))
        w, l = float(_take(p, "W")), int(_take(p, "l"))
        probe_trials = int(p.pop("probe_trials", 200))
        seed = int(p.pop("seed", 0))
        _no_extra(p)
        return build_adversary_full(alg, w, l, probe_trials=probe_trials, seed=seed)
    # random
    kwargs = dict(
        n_buyers=int(_take(p, "n_buyers")),
        n_sellers=int(_take(p, "n_sellers")),
        seed=int(p.pop("seed", 0)),
        low=int(p.pop("low", 0)),
        high=int(p.pop("high", 10)),
        vertex_weighted=_as_bool(p.pop("vertex_weighted", False)),
    )
    model = p.pop("model", None)
    free_disposal = _as_bool(p.pop("free_disposal", False))
    _no_extra(p)
    if model is None:
        if free_disposal:
            raise ConfigError("free_disposal requires model=vertex")
        return random_market(**kwargs)
    return random_instance(model=str(model), free_disposal=free_disposal, **kwargs)


def _take(params: dict, key: str):
    if key not in params:
        raise ConfigError(f"family parameter {key!r} is required")
    return params.pop(key)


def _pair_index(params: dict) -> int:
    idx = int(params.pop("index", 1))
    _no_extra(params)
    if idx not in (1, 2):
        raise ConfigError("index must be 1 or 2")
    return idx - 1


def _no_extra(params: dict) -> None:
    if params:
        raise ConfigError(f"unknown family parameters: {sorted(params)}")


def _as_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    if str(value).lower() in ("true", "1", "yes"):
        return True
    if str(value).lower() in ("false", "0", "no"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")
