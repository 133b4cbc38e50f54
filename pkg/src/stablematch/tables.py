"""Desk-scale reproduction of the vertex-weighted and free-disposal
guarantee tables.

Each table has rows (kappa, norm_si, lambda) x columns (post, ante, avg).
A cell carries the claimed bound, a status, and the measured value:

* ``verified-lower-bound`` -- the claim was checked on the fixed desk-scale
  suite (tight gadgets plus seeded random sweeps) and held.
* ``estimate``  -- a measured value with no claim to check.
* ``open``      -- the exact value is an open question (or the algorithm
  attaining the published bound is outside this package); the measured
  number is an estimate, never a resolution.

A cell is never reported stronger than its claim; a verified bound that
fails flips the cell's ``ok`` flag and a witness file is dumped.  Independent
measurement jobs run in parallel when STABLEMATCH_THREADS > 1; assembly
order is fixed, so output bytes do not depend on the thread count.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import instances as lab
from .evaluation import EvalConfig, evaluate
from .metrics import metric_report
from .model import TOL
from .online import GreedyFreeDisposal, Ranking, VertexGreedy, simulate

_ONE_MINUS_1_OVER_E = 1.0 - math.exp(-1.0)
_TRI_SIZES = (4, 5, 6)


@dataclass(frozen=True)
class Cell:
    metric: str
    mode: str
    claim: str
    status: str
    measured: float
    detail: str
    ok: bool = True


def _threads() -> int:
    raw = os.environ.get("STABLEMATCH_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _run_jobs(jobs: dict) -> dict:
    """Evaluate named thunks, in parallel when configured; keyed results."""
    keys = list(jobs)
    workers = _threads()
    if workers == 1:
        values = [jobs[k]() for k in keys]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(lambda k: jobs[k](), keys))
    return dict(zip(keys, values))


def _vw_sweep_instances(seed: int, count: int = 40):
    insts = list(lab.vertex_pair())
    rng = np.random.default_rng([seed, 1])
    for _ in range(count):
        nb = int(rng.integers(2, 6))
        ns = int(rng.integers(2, 6))
        insts.append(lab.random_instance(nb, ns, int(rng.integers(1 << 30)),
                                         vertex_weighted=True))
    return insts


def _fd_sweep_instances(seed: int, count: int = 40):
    insts = [lab.adversary_begin(10, 3),
             lab.build_adversary_full(GreedyFreeDisposal(), 10, 3, 50, seed)]
    rng = np.random.default_rng([seed, 2])
    for _ in range(count):
        nb = int(rng.integers(2, 6))
        ns = int(rng.integers(2, 6))
        insts.append(lab.random_instance(nb, ns, int(rng.integers(1 << 30)),
                                         free_disposal=True))
    return insts


def _post_reports(instances, alg):
    return [metric_report(inst.market, simulate(inst, alg, seed=0))
            for inst in instances]


def _tri_exact(n: int) -> dict:
    tri = lab.triangular(n)
    return {
        metric_mode: evaluate(tri, Ranking(), EvalConfig(*metric_mode)).value
        for metric_mode in (("lambda", "ante"), ("lambda", "avg"),
                            ("kappa", "avg"), ("norm_si", "avg"))
    }


def vertex_weighted_cells(seed: int = 0, trials: int = 2000) -> list[Cell]:
    """All nine cells of the vertex-weighted table."""
    jobs = {
        "sweep": lambda: _post_reports(_vw_sweep_instances(seed), VertexGreedy()),
    }
    for n in _TRI_SIZES:
        jobs[f"tri{n}"] = lambda n=n: _tri_exact(n)
    for metric in ("kappa", "norm_si"):
        jobs[f"mc_{metric}"] = lambda metric=metric: evaluate(
            lab.triangular(5), Ranking(),
            EvalConfig(metric, "ante", "monte_carlo", trials, seed),
        )
    res = _run_jobs(jobs)

    reports = res["sweep"]
    lam_min = min(r.lambda_ for r in reports)
    kap_min = min(r.kappa for r in reports if r.kappa is not None)
    j_min = min(r.norm_si for r in reports)
    tri = {n: res[f"tri{n}"] for n in _TRI_SIZES}
    lam_ante = [tri[n][("lambda", "ante")] for n in _TRI_SIZES]
    lam_avg = [tri[n][("lambda", "avg")] for n in _TRI_SIZES]
    kap_avg = [tri[n][("kappa", "avg")] for n in _TRI_SIZES]
    j_avg = [tri[n][("norm_si", "avg")] for n in _TRI_SIZES]
    mc_k, mc_j = res["mc_kappa"], res["mc_norm_si"]

    def bounded(metric, mode, claim, measured, detail, bound):
        return Cell(metric, mode, claim, "verified-lower-bound", float(measured),
                    detail, ok=measured >= bound - 1e-9)

    return [
        bounded("kappa", "post", "1/2", kap_min,
                f"greedy with half prices, worst of {len(reports)} instances "
                "(tight on the two-seller gadget)", 0.5),
        Cell("kappa", "ante", "?", "open", float(mc_k.value),
             f"exact value open; ranking on triangular(5), {trials} trials, "
             f"se={mc_k.std_error:.2g}"),
        bounded("kappa", "avg", "1 - 1/e", min(kap_avg),
                f"ranking on triangular {_TRI_SIZES}, rank-order exact "
                f"(values {[round(v, 6) for v in kap_avg]})",
                _ONE_MINUS_1_OVER_E - 0.01),
        bounded("norm_si", "post", "1/2", j_min,
                "greedy with half prices; index dominates kappa on every outcome",
                0.5),
        Cell("norm_si", "ante", "?", "open", float(mc_j.value),
             f"exact value open; ranking on triangular(5), {trials} trials, "
             f"se={mc_j.std_error:.2g}"),
        bounded("norm_si", "avg", "1 - 1/e", min(j_avg),
                f"ranking on triangular {_TRI_SIZES} "
                f"(values {[round(v, 6) for v in j_avg]})",
                _ONE_MINUS_1_OVER_E - 0.01),
        bounded("lambda", "post", "1/2", lam_min,
                f"greedy, worst of {len(reports)} instances", 0.5),
        bounded("lambda", "ante", "1 - 1/e", min(lam_ante),
                f"ranking on triangular {_TRI_SIZES}, rank-order exact",
                _ONE_MINUS_1_OVER_E - 1e-9),
        bounded("lambda", "avg", "1 - 1/e", min(lam_avg),
                "equals the ante column: the optimality ratio is linear in "
                "utilities", _ONE_MINUS_1_OVER_E - 1e-9),
    ]


def _adversary_checks(seed: int, trials: int) -> dict:
    ante, posts = [], []
    for w, l in ((10, 3), (100, 5)):
        for alg in (GreedyFreeDisposal(), GreedyFreeDisposal(random_ties=True)):
            full = lab.build_adversary_full(alg, w, l, probe_trials=100, seed=seed)
            rep = evaluate(full, alg,
                           EvalConfig("kappa", "ante", "monte_carlo", trials, seed))
            post = evaluate(full, alg,
                            EvalConfig("kappa", "post", "monte_carlo",
                                       min(trials, 500), seed))
            se = rep.std_error or 0.0
            ante.append((w, l, alg.tag, rep.value, 1.0 / w + 0.5 ** l + 3.0 * se))
            posts.append((w, post.value))
    return {"ante": ante, "posts": posts}


def free_disposal_cells(seed: int = 0, trials: int = 2000) -> list[Cell]:
    """All nine cells of the edge-weighted free-disposal table."""
    jobs = {
        "sweep": lambda: _post_reports(_fd_sweep_instances(seed),
                                       GreedyFreeDisposal()),
        "adversary": lambda: _adversary_checks(seed, trials),
        "kavg": lambda: evaluate(
            lab.build_adversary_full(GreedyFreeDisposal(random_ties=True),
                                     10, 3, 100, seed),
            GreedyFreeDisposal(random_ties=True),
            EvalConfig("kappa", "avg", "monte_carlo", trials, seed),
        ),
    }
    res = _run_jobs(jobs)

    reports = res["sweep"]
    lam_min = min(r.lambda_ for r in reports)
    j_min = min(r.norm_si for r in reports)
    ante = res["adversary"]["ante"]
    posts = res["adversary"]["posts"]
    ante_ok = all(value <= bound for _, _, _, value, bound in ante)
    worst_ante = max(value for _, _, _, value, _ in ante)
    collapse_ok = all(v <= 1.0 / w + TOL for w, v in posts)
    kavg = res["kavg"]

    external = ("bound attained by an external algorithm, out of scope here; "
                "measured reassigning-greedy value shown")
    return [
        Cell("kappa", "post", "-> 0", "verified-lower-bound",
             float(min(v for _, v in posts)),
             "adversary pipeline: a sampled outcome collapses below 1/W at "
             "(W, l) in {(10, 3), (100, 5)}", ok=collapse_ok),
        Cell("kappa", "ante", "-> 0", "verified-lower-bound", float(worst_ante),
             "measured kappa_ante <= 1/W + 1/2^l + 3 se for greedy and "
             f"coin-tie variants: {[(w, l, round(v, 5)) for w, l, _, v, _ in ante]}",
             ok=ante_ok),
        Cell("kappa", "avg", "?", "open", float(kavg.value),
             f"conjectured 0; coin-tie greedy on the (10, 3) trap, {trials} "
             f"trials, se={kavg.std_error:.2g}"),
        Cell("norm_si", "post", ">= 1/4", "verified-lower-bound", float(j_min),
             f"greedy with half prices, worst of {len(reports)} instances",
             ok=j_min >= 0.25 - 1e-9),
        Cell("norm_si", "ante", ">= 0.268", "open", float(j_min), external),
        Cell("norm_si", "avg", ">= 0.268", "open", float(j_min), external),
        Cell("lambda", "post", "1/2", "verified-lower-bound", float(lam_min),
             f"greedy with reassignment, worst of {len(reports)} instances",
             ok=lam_min >= 0.5 - 1e-9),
        Cell("lambda", "ante", ">= 0.536", "open", float(lam_min), external),
        Cell("lambda", "avg", ">= 0.536", "open", float(lam_min), external),
    ]


def render_csv(cells: list[Cell]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["metric", "mode", "claim", "status", "measured", "detail"])
    metric_order = {m: k for k, m in enumerate(("kappa", "norm_si", "lambda"))}
    mode_order = {m: k for k, m in enumerate(("post", "ante", "avg"))}
    for cell in sorted(cells, key=lambda c: (metric_order[c.metric],
                                             mode_order[c.mode])):
        writer.writerow([cell.metric, cell.mode, cell.claim, cell.status,
                         f"{cell.measured:.9g}", cell.detail])
    return buf.getvalue()


def write_tables(outdir, seed: int = 0, trials: int = 2000) -> list[Cell]:
    """Write both tables as CSV; returns the cells whose bound checks failed.

    On failure a ``violations.json`` witness is written alongside the tables.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    vw = vertex_weighted_cells(seed, trials)
    fd = free_disposal_cells(seed, trials)
    (out / "table_vertex_weighted.csv").write_text(render_csv(vw))
    (out / "table_free_disposal.csv").write_text(render_csv(fd))
    bad = [c for c in vw + fd if not c.ok]
    if bad:
        witness = [
            {"table": "vertex_weighted" if c in vw else "free_disposal",
             "metric": c.metric, "mode": c.mode, "claim": c.claim,
             "measured": c.measured, "detail": c.detail}
            for c in bad
        ]
        (out / "violations.json").write_text(json.dumps(witness, indent=2) + "\n")
    return bad
