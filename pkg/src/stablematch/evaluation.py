"""Ex-post, ex-ante, and average evaluation of randomized online algorithms.

For a metric m and an algorithm inducing a distribution over allocations:

* ex-post  = worst m over the support,
* ex-ante  = expected m,
* average  = m applied to the expected utility vectors.

Exact evaluation enumerates the algorithm's decision tree (every discrete
draw forks the run; capped at ``SUPPORT_CAP`` atoms).  Ranking draws
continuous ranks, which exact mode discretizes to quantile midpoints; for
average-mode metrics and the optimality ratio there is also a genuinely
exact path that enumerates the n! rank orderings and integrates the
threshold function against the rank order statistics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Optional, Sequence

import numpy as np
from scipy.special import hyp1f1

from .errors import CapacityError, ConfigError, DomainError, Error
from .metrics import kappa_from_utilities, si_from_utilities
from .model import TOL, Allocation, Market, utilities
from .assignment import optimal_value
from .online import OnlineInstance, Ranking, SamplingSource, _require_model, describe

SUPPORT_CAP = 50_000
_RANK_ENUM_CAP = math.factorial(8)

METRICS = ("lambda", "norm_si", "kappa")
MODES = ("post", "ante", "avg")


class AuditViolation(Error):
    """An inequality chain failed beyond tolerance; carries the witness."""


@dataclass(frozen=True)
class EvalConfig:
    """What to evaluate and how."""

    metric: str
    mode: str
    method: str = "exact"
    trials: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.method not in ("exact", "monte_carlo"):
            raise ConfigError(f"method must be exact or monte_carlo, got {self.method!r}")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Result of one (metric, mode) evaluation."""

    metric: str
    mode: str
    method: str
    value: float
    std_error: Optional[float]
    support_size: Optional[int]
    trials: Optional[int]
    expected_u: np.ndarray
    expected_v: np.ndarray
    estimated: bool = False
    non_ir_outcomes: int = 0
    notes: str = ""


class EnumerationSource:
    """Replays a forced decision prefix, then takes the first branch.

    Records every decision so a driver can walk the whole tree odometer
    style.  ``uniform`` branches over quantile midpoints, which is what makes
    continuous-rank algorithms enumerable at all.
    """

    def __init__(self, forced: Sequence[int]):
        self.forced = forced
        self.trace: list[tuple[int, tuple[float, ...]]] = []

    def choice(self, probs: Sequence[float]) -> int:
        k = len(self.trace)
        idx = self.forced[k] if k < len(self.forced) else _first_positive(probs)
        self.trace.append((idx, tuple(probs)))
        return idx

    def uniform(self, grid_points: int) -> float:
        idx = self.choice([1.0 / grid_points] * grid_points)
        return (idx + 0.5) / grid_points


def _first_positive(probs: Sequence[float]) -> int:
    for i, p in enumerate(probs):
        if p > 0:
            return i
    raise ConfigError("no option has positive probability")


def _next_positive(probs: Sequence[float], after: int) -> Optional[int]:
    for i in range(after + 1, len(probs)):
        if probs[i] > 0:
            return i
    return None


def enumerate_support(
    instance: OnlineInstance, alg, cap: int = SUPPORT_CAP
) -> list[tuple[float, Allocation]]:
    """All (probability, allocation) atoms of the algorithm's distribution.

    Re-runs the algorithm once per support atom, forcing recorded decision
    prefixes; raises CapacityError beyond ``cap`` atoms.
    """
    _require_model(alg, instance)
    outcomes: list[tuple[float, Allocation]] = []
    forced: list[int] = []
    while True:
        src = EnumerationSource(forced)
        alloc = alg.run(instance, src)
        prob = 1.0
        for idx, probs in src.trace:
            prob *= probs[idx]
        outcomes.append((prob, alloc))
        if len(outcomes) > cap:
            raise CapacityError(
                f"support of {describe(alg)!r} exceeds {cap} atoms; "
                "use method='monte_carlo'"
            )
        trace = src.trace
        while trace:
            idx, probs = trace[-1]
            nxt = _next_positive(probs, idx)
            if nxt is None:
                trace.pop()
            else:
                forced = [i for i, _ in trace[:-1]] + [nxt]
                break
        if not trace:
            return outcomes


def _metric_value(market: Market, opt: float, u: np.ndarray, v: np.ndarray, metric: str) -> float:
    if metric == "lambda":
        return 1.0 if opt <= TOL else float(u.sum() + v.sum()) / opt
    if metric == "norm_si":
        return 1.0 if opt <= TOL else 1.0 - si_from_utilities(market, u, v) / opt
    val = kappa_from_utilities(market, u, v)
    if val is None:
        raise DomainError("kappa is undefined: no pair has positive surplus")
    return val


def avg_subset_instability(market: Market, expected_u, expected_v) -> float:
    """Subset instability of the expected utility vectors."""
    return si_from_utilities(market, expected_u, expected_v)


@dataclass(frozen=True, eq=False)
class _Atoms:
    """Weighted utility outcomes, however obtained."""

    probs: np.ndarray
    us: np.ndarray  # one row per atom
    vs: np.ndarray
    notes: str = ""


def _atoms_from_support(market: Market, support) -> _Atoms:
    probs, us, vs = [], [], []
    for p, alloc in support:
        prof = utilities(market, alloc)
        probs.append(p)
        us.append(prof.u)
        vs.append(prof.v)
    return _Atoms(np.array(probs), np.array(us), np.array(vs))


def _is_uniform_weight(market: Market) -> bool:
    a = market.surplus
    vals = a[a > 0]
    return vals.size == 0 or float(np.ptp(vals)) <= 1e-12


def order_stat_threshold_mean(k: int, n: int) -> float:
    """E[e^(Y-1)] for Y the k-th smallest of n independent U[0,1] ranks.

    Y ~ Beta(k, n+1-k), whose moment generating function at 1 is the
    confluent hypergeometric value 1F1(k; n+1; 1).
    """
    return float(np.exp(-1.0) * hyp1f1(k, n + 1, 1.0))


def _rank_order_atoms(instance: OnlineInstance, alg: Ranking) -> _Atoms:
    """Exact Ranking atoms over seller-rank orderings (uniform-weight only).

    Within one ordering the matching is fixed and each matched seller's
    expected threshold is the corresponding order-statistic mean, which is
    everything the average-mode metrics and the optimality ratio depend on.
    """
    market = instance.market
    ns = market.n_sellers
    if not _is_uniform_weight(market):
        raise CapacityError(
            "exact rank-order evaluation needs all positive surpluses equal; "
            "use method='monte_carlo'"
        )
    if math.factorial(ns) > _RANK_ENUM_CAP:
        raise CapacityError(
            f"rank-order enumeration is limited to {_RANK_ENUM_CAP} orderings; "
            "use method='monte_carlo'"
        )
    means = [order_stat_threshold_mean(k, ns) for k in range(1, ns + 1)]
    a = market.surplus
    prob = 1.0 / math.factorial(ns)
    probs, us, vs = [], [], []
    for perm in permutations(range(ns)):
        rank_of_seller = [0] * ns
        for pos, j in enumerate(perm):
            rank_of_seller[j] = pos
        matching = alg.matching_for_rank_order(instance, rank_of_seller)
        u = np.zeros(market.n_buyers)
        v = np.zeros(ns)
        for i, j in matching.pairs:
            m = means[rank_of_seller[j]]
            u[i] = a[i, j] * (1.0 - m)
            v[j] = a[i, j] * m
        probs.append(prob)
        us.append(u)
        vs.append(v)
    return _Atoms(np.array(probs), np.array(us), np.array(vs),
                  notes="rank-order enumeration")


def _exact_atoms(instance: OnlineInstance, alg, config: EvalConfig) -> _Atoms:
    if isinstance(alg, Ranking):
        rank_exact_ok = (
            (config.metric == "lambda" or config.mode == "avg")
            and _is_uniform_weight(instance.market)
            and math.factorial(instance.market.n_sellers) <= _RANK_ENUM_CAP
        )
        if rank_exact_ok:
            return _rank_order_atoms(instance, alg)
        atoms = _atoms_from_support(
            instance.market, enumerate_support(instance, alg)
        )
        return _Atoms(atoms.probs, atoms.us, atoms.vs,
                      notes=f"rank grid discretization ({alg.grid_points} midpoints per seller)")
    return _atoms_from_support(instance.market, enumerate_support(instance, alg))


def _aggregate(
    market: Market, opt: float, atoms: _Atoms, config: EvalConfig
) -> tuple[float, np.ndarray, np.ndarray, int]:
    """(value, expected_u, expected_v, non_ir_count) for one metric/mode."""
    p = atoms.probs
    exp_u = p @ atoms.us
    exp_v = p @ atoms.vs
    non_ir = int(sum(
        1 for u, v in zip(atoms.us, atoms.vs)
        if (u < -TOL).any() or (v < -TOL).any()
    ))
    if config.mode == "avg":
        value = _metric_value(market, opt, exp_u, exp_v, config.metric)
    else:
        per = np.array([
            _metric_value(market, opt, u, v, config.metric)
            for u, v in zip(atoms.us, atoms.vs)
        ])
        value = float(per.min()) if config.mode == "post" else float(p @ per)
    return value, exp_u, exp_v, non_ir


def evaluate(instance: OnlineInstance, alg, config: EvalConfig) -> EvalReport:
    """Evaluate one metric in one mode, exactly or by Monte Carlo.

    Monte-Carlo ex-post is only an upper estimate of the true minimum (the
    worst outcome may be unsampled) and is flagged ``estimated``.
    """
    _require_model(alg, instance)
    market = instance.market
    opt = optimal_value(market)
    if config.method == "exact":
        atoms = _exact_atoms(instance, alg, config)
        value, exp_u, exp_v, non_ir = _aggregate(market, opt, atoms, config)
        return EvalReport(
            metric=config.metric, mode=config.mode, method="exact",
            value=value, std_error=None, support_size=len(atoms.probs),
            trials=None, expected_u=exp_u, expected_v=exp_v,
            non_ir_outcomes=non_ir, notes=atoms.notes,
        )
    return _monte_carlo(instance, alg, config, opt)


def _monte_carlo(
    instance: OnlineInstance, alg, config: EvalConfig, opt: float
) -> EvalReport:
    market = instance.market
    t = config.trials
    us = np.empty((t, market.n_buyers))
    vs = np.empty((t, market.n_sellers))
    for k in range(t):
        rng = np.random.default_rng([config.seed, k])
        alloc = alg.run(instance, SamplingSource(rng))
        prof = utilities(market, alloc)
        us[k] = prof.u
        vs[k] = prof.v
    non_ir = int(((us < -TOL).any(axis=1) | (vs < -TOL).any(axis=1)).sum())
    exp_u = us.mean(axis=0)
    exp_v = vs.mean(axis=0)
    estimated = False
    if config.mode == "avg":
        value = _metric_value(market, opt, exp_u, exp_v, config.metric)
        se = _bootstrap_se(market, opt, us, vs, config)
    else:
        per = np.array([
            _metric_value(market, opt, us[k], vs[k], config.metric) for k in range(t)
        ])
        if config.mode == "post":
            value = float(per.min())
            se = None
            estimated = True  # minimum over samples only bounds the true worst case
        else:
            value = float(per.mean())
            se = float(per.std(ddof=1) / math.sqrt(t)) if t > 1 else None
    return EvalReport(
        metric=config.metric, mode=config.mode, method="monte_carlo",
        value=value, std_error=se, support_size=None, trials=t,
        expected_u=exp_u, expected_v=exp_v, estimated=estimated,
        non_ir_outcomes=non_ir,
    )


def _bootstrap_se(
    market: Market, opt: float, us: np.ndarray, vs: np.ndarray,
    config: EvalConfig, resamples: int = 100,
) -> Optional[float]:
    t = us.shape[0]
    if t < 2:
        return None
    rng = np.random.default_rng([config.seed, t, 0xB007])
    vals = np.empty(resamples)
    for b in range(resamples):
        idx = rng.integers(0, t, size=t)
        vals[b] = _metric_value(
            market, opt, us[idx].mean(axis=0), vs[idx].mean(axis=0), config.metric
        )
    return float(vals.std(ddof=1))


@dataclass(frozen=True, eq=False)
class AuditReport:
    """All nine (metric x mode) exact values plus the verified chains."""

    values: dict
    kappa_skipped: bool
    support_size: int
    non_ir_outcomes: int


def inequality_audit(instance: OnlineInstance, alg, cap: int = SUPPORT_CAP) -> AuditReport:
    """Compute all nine exact values and verify both inequality chains.

    Per metric: post <= ante <= avg.  Per mode: kappa <= norm_si <= lambda
    (skipped for kappa when it is undefined or some outcome is not
    individually rational).  The optimality ratio's ante and avg forms must
    agree exactly.  Raises AuditViolation with a witness on failure.
    """
    market = instance.market
    opt = optimal_value(market)
    support = enumerate_support(instance, alg, cap)
    atoms = _atoms_from_support(market, support)
    kappa_defined = (market.surplus > 0).any()
    non_ir = int(sum(
        1 for u, v in zip(atoms.us, atoms.vs)
        if (u < -TOL).any() or (v < -TOL).any()
    ))
    kappa_skipped = (not kappa_defined) or non_ir > 0
    values: dict = {}
    for metric in METRICS:
        if metric == "kappa" and not kappa_defined:
            for mode in MODES:
                values[(metric, mode)] = None
            continue
        for mode in MODES:
            cfg = EvalConfig(metric=metric, mode=mode)
            value, _, _, _ = _aggregate(market, opt, atoms, cfg)
            values[(metric, mode)] = value

    def _check(lo, hi, label):
        if lo is not None and hi is not None and lo > hi + 1e-9:
            raise AuditViolation(
                f"{label} violated on {describe(alg)!r}: {lo} > {hi} "
                f"(support size {len(support)})"
            )

    for metric in METRICS:
        if metric == "kappa" and kappa_skipped:
            continue
        _check(values[(metric, "post")], values[(metric, "ante")],
               f"{metric}: post <= ante")
        _check(values[(metric, "ante")], values[(metric, "avg")],
               f"{metric}: ante <= avg")
    for mode in MODES:
        if not kappa_skipped:
            _check(values[("kappa", mode)], values[("norm_si", mode)],
                   f"{mode}: kappa <= norm_si")
        _check(values[("norm_si", mode)], values[("lambda", mode)],
               f"{mode}: norm_si <= lambda")
    lam_ante, lam_avg = values[("lambda", "ante")], values[("lambda", "avg")]
    if abs(lam_ante - lam_avg) > 1e-9:
        raise AuditViolation(
            f"lambda ante ({lam_ante}) and avg ({lam_avg}) must coincide"
        )
    return AuditReport(
        values=values, kappa_skipped=kappa_skipped,
        support_size=len(support), non_ir_outcomes=non_ir,
    )
