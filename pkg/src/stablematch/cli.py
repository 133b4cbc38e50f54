"""Command-line interface.

Every command writes machine-readable JSON (or CSV) to stdout or ``-o`` and
a short human summary to stderr.  Identical flags and seed reproduce the
output byte for byte.  Exit codes: 0 success, 1 verified-bound violation in
``tables``, 2 validation error, 3 capacity error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import fileio
from .errors import CapacityError, ConfigError, Error, SchemaError
from .evaluation import EvalConfig, evaluate
from .instances import GeneratorSpec, generate
from .metrics import MetricReport, metric_report
from .model import Allocation, Market, Matching, utilities
from .online import OnlineInstance, algorithm_by_name, simulate
from .pricing import half_prices, min_si_prices, shapley_shubik_prices
from .tables import write_tables
from .assignment import max_weight_matching


def _load_market(path: str) -> Market:
    obj = fileio.load_instance(path)
    return obj.market if isinstance(obj, OnlineInstance) else obj


def _load_online(path: str) -> OnlineInstance:
    obj = fileio.load_instance(path)
    if not isinstance(obj, OnlineInstance):
        raise ConfigError(
            f"{path} holds a plain market; this command needs an arrival script"
        )
    return obj


def _resolve_name(token: str, names: tuple[str, ...], side: str) -> int:
    exact = [k for k, n in enumerate(names) if n == token]
    if len(exact) == 1:
        return exact[0]
    prefixed = [k for k, n in enumerate(names) if n.lower().startswith(token.lower())]
    if len(prefixed) == 1:
        return prefixed[0]
    raise ConfigError(
        f"{side} name {token!r} is {'ambiguous' if prefixed else 'unknown'} "
        f"among {list(names)}"
    )


def parse_matching(literal: str, market: Market) -> Matching:
    """Parse ``"Alice-Dori,Bob-Edward"`` (unique name prefixes allowed)."""
    pairs = []
    if literal.strip():
        for chunk in literal.split(","):
            if "-" not in chunk:
                raise ConfigError(f"matching entry {chunk!r} is not 'Buyer-Seller'")
            btok, stok = chunk.split("-", 1)
            pairs.append((
                _resolve_name(btok.strip(), market.buyer_ids, "buyer"),
                _resolve_name(stok.strip(), market.seller_ids, "seller"),
            ))
    return Matching.from_pairs(pairs)


def parse_prices(literal: str, market: Market) -> np.ndarray:
    try:
        values = [float(x) for x in literal.split(",")]
    except ValueError as exc:
        raise ConfigError(f"prices must be comma-separated numbers: {exc}") from exc
    if len(values) != market.n_sellers:
        raise ConfigError(
            f"expected {market.n_sellers} prices (one per seller, in seller order)"
        )
    return np.array(values)


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _emit(payload, args, summary: str) -> None:
    if getattr(args, "format", "json") == "csv":
        flat = _flatten(payload)
        lines = ["key,value"] + [f"{k},{v}" for k, v in flat]
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps(_jsonify(payload), indent=2) + "\n"
    if getattr(args, "output", None):
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    print(summary, file=sys.stderr)


def _flatten(payload, prefix=""):
    rows = []
    if isinstance(payload, dict):
        for k, v in payload.items():
            rows.extend(_flatten(v, f"{prefix}{k}." if prefix else f"{k}."))
    elif isinstance(payload, (list, tuple, np.ndarray)):
        value = json.dumps(_jsonify(payload)).replace(",", ";")
        rows.append((prefix.rstrip("."), value))
    else:
        rows.append((prefix.rstrip("."), _jsonify(payload)))
    return rows


def _allocation_payload(market: Market, alloc: Allocation) -> dict:
    prof = utilities(market, alloc)
    return {
        "matching": [
            [market.buyer_ids[i], market.seller_ids[j]]
            for i, j in alloc.matching.sorted_pairs
        ],
        "prices": alloc.prices,
        "buyer_utilities": dict(zip(market.buyer_ids, prof.u)),
        "seller_utilities": dict(zip(market.seller_ids, prof.v)),
    }


def _report_payload(report: MetricReport) -> dict:
    return {
        "lambda": report.lambda_,
        "si": report.si,
        "norm_si": report.norm_si,
        "kappa": report.kappa,
        "kappa_raw": report.kappa_raw,
        "opt": report.opt,
        "ir": report.ir,
    }


def cmd_solve(args) -> int:
    market = _load_market(args.instance)
    res = max_weight_matching(market.surplus)
    alloc = shapley_shubik_prices(market)
    payload = {
        "opt": res.value,
        "alpha": dict(zip(market.buyer_ids, res.alpha)),
        "beta": dict(zip(market.seller_ids, res.beta)),
        "stable_allocation": _allocation_payload(market, alloc),
    }
    _emit(payload, args, f"opt={res.value:g} with {len(res.matching)} pairs")
    return 0


def cmd_metrics(args) -> int:
    market = _load_market(args.instance)
    matching = parse_matching(args.matching, market)
    if args.prices is None:
        alloc = half_prices(market, matching)
    else:
        alloc = Allocation(matching, parse_prices(args.prices, market))
    report = metric_report(market, alloc)
    _emit(_report_payload(report), args,
          f"lambda={report.lambda_:.4g} si={report.si:.4g} "
          f"norm_si={report.norm_si:.4g} kappa={report.kappa}")
    return 0


def cmd_price(args) -> int:
    market = _load_market(args.instance)
    if args.policy == "shapley-shubik":
        alloc = shapley_shubik_prices(market)
    else:
        if args.matching is None:
            raise ConfigError(f"--matching is required for policy {args.policy}")
        matching = parse_matching(args.matching, market)
        alloc = (half_prices if args.policy == "half" else min_si_prices)(
            market, matching
        )
    payload = {
        "policy": args.policy,
        "allocation": _allocation_payload(market, alloc),
        "metrics": _report_payload(metric_report(market, alloc)),
    }
    _emit(payload, args, f"{args.policy} prices on {len(alloc.matching)} pairs")
    return 0


def cmd_simulate(args) -> int:
    instance = _load_online(args.instance)
    alg = algorithm_by_name(args.alg)
    alloc = simulate(instance, alg, seed=args.seed)
    payload = {
        "algorithm": args.alg,
        "seed": args.seed,
        "allocation": _allocation_payload(instance.market, alloc),
        "metrics": _report_payload(metric_report(instance.market, alloc)),
    }
    _emit(payload, args, f"{args.alg} matched {len(alloc.matching)} pairs")
    return 0


def cmd_evaluate(args) -> int:
    instance = _load_online(args.instance)
    alg = algorithm_by_name(args.alg)
    config = EvalConfig(args.metric, args.mode, args.method, args.trials, args.seed)
    report = evaluate(instance, alg, config)
    payload = {
        "algorithm": args.alg,
        "metric": report.metric,
        "mode": report.mode,
        "method": report.method,
        "value": report.value,
        "std_error": report.std_error,
        "support_size": report.support_size,
        "trials": report.trials,
        "estimated": report.estimated,
        "non_ir_outcomes": report.non_ir_outcomes,
        "expected_u": dict(zip(instance.market.buyer_ids, report.expected_u)),
        "expected_v": dict(zip(instance.market.seller_ids, report.expected_v)),
        "notes": report.notes,
    }
    _emit(payload, args,
          f"{args.metric}_{args.mode}({args.alg}) = {report.value:.6g}")
    return 0


def cmd_gen(args) -> int:
    params = {}
    if args.params:
        for chunk in args.params.split(","):
            if "=" not in chunk:
                raise ConfigError(f"parameter {chunk!r} is not key=value")
            key, value = chunk.split("=", 1)
            params[key.strip()] = value.strip()
    obj = generate(GeneratorSpec(args.family, params))
    text = fileio.dumps(obj)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    kind = "online instance" if isinstance(obj, OnlineInstance) else "market"
    print(f"generated {args.family} {kind}", file=sys.stderr)
    return 0


def cmd_tables(args) -> int:
    bad = write_tables(args.output, seed=args.seed, trials=args.trials)
    if bad:
        print(f"{len(bad)} verified bound(s) violated; see violations.json",
              file=sys.stderr)
        return 1
    print(f"tables written to {args.output}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stablematch",
        description="Assignment games: stability metrics, pricing policies, "
                    "and online matching experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, output=True):
        if output:
            p.add_argument("-o", "--output", help="write the payload here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("solve", help="optimal matching, duals, and stable prices")
    p.add_argument("--instance", required=True)
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("metrics", help="stability metrics of a given allocation")
    p.add_argument("--instance", required=True)
    p.add_argument("--matching", required=True,
                   help='e.g. "Alice-Dori,Bob-Edward" (unique prefixes allowed)')
    p.add_argument("--prices", help="comma-separated, seller order; default half prices")
    common(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("price", help="price a matching with a policy")
    p.add_argument("--instance", required=True)
    p.add_argument("--policy", required=True,
                   choices=("shapley-shubik", "half", "min-si"))
    p.add_argument("--matching")
    common(p)
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("simulate", help="run an online algorithm once")
    p.add_argument("--instance", required=True)
    p.add_argument("--alg", required=True)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="ex-post/ex-ante/average evaluation")
    p.add_argument("--instance", required=True)
    p.add_argument("--alg", required=True)
    p.add_argument("--metric", required=True, choices=("lambda", "norm_si", "kappa"))
    p.add_argument("--mode", required=True, choices=("post", "ante", "avg"))
    p.add_argument("--method", default="exact", choices=("exact", "monte_carlo"))
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gen", help="generate a named instance family")
    p.add_argument("--family", required=True)
    p.add_argument("--params", help="comma-separated key=value pairs")
    p.add_argument("-o", "--output", help="write the instance JSON here")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("tables", help="desk-scale guarantee tables as CSV")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=2000)
    p.set_defaults(func=cmd_tables)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (Error, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
