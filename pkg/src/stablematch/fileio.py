"""JSON (de)serialization of markets and online instances.

Schema::

    {
      "buyers": ["Alice", ...],
      "sellers": [{"name": "Dori", "cost": 6.0}, ...],
      "valuations": [[...], ...],              # row-major, buyers x sellers
      "arrival": {                             # optional; makes it online
        "model": "edge" | "vertex",
        "order": [[i, j], ...] | [i, ...],
        "free_disposal": false,
        "vertex_weighted": true                # optional claim, verified
      }
    }

Unknown fields are rejected by name; loading then saving reproduces the file
byte for byte.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Union

from .errors import SchemaError, StructuralError
from .model import Market
from .online import EDGE, OnlineInstance

_TOP_FIELDS = {"buyers", "sellers", "valuations", "arrival"}
_SELLER_FIELDS = {"name", "cost"}
_ARRIVAL_FIELDS = {"model", "order", "free_disposal", "vertex_weighted"}


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise SchemaError(f"missing required field {key!r} in {where}")
    return data[key]


def _reject_unknown(data: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise SchemaError(f"unknown field(s) {unknown} in {where}")


def _parse_market(data: dict) -> Market:
    _reject_unknown(data, _TOP_FIELDS, "instance")
    buyers = _require(data, "buyers", "instance")
    sellers = _require(data, "sellers", "instance")
    valuations = _require(data, "valuations", "instance")
    if not isinstance(buyers, list) or not all(isinstance(b, str) for b in buyers):
        raise SchemaError("'buyers' must be a list of names")
    if not isinstance(sellers, list):
        raise SchemaError("'sellers' must be a list of {name, cost} objects")
    names, costs = [], []
    for k, entry in enumerate(sellers):
        if not isinstance(entry, dict):
            raise SchemaError(f"seller #{k} must be an object with name and cost")
        _reject_unknown(entry, _SELLER_FIELDS, f"seller #{k}")
        names.append(str(_require(entry, "name", f"seller #{k}")))
        cost = _require(entry, "cost", f"seller #{k}")
        if not isinstance(cost, (int, float)):
            raise SchemaError(f"seller #{k} cost must be a number")
        costs.append(float(cost))
    if not isinstance(valuations, list) or len(valuations) != len(buyers):
        raise SchemaError("'valuations' must have one row per buyer")
    for k, row in enumerate(valuations):
        if not isinstance(row, list) or len(row) != len(names):
            raise SchemaError(f"valuation row #{k} must list one value per seller")
        if not all(isinstance(x, (int, float)) for x in row):
            raise SchemaError(f"valuation row #{k} must contain numbers")
    try:
        return Market(tuple(buyers), tuple(names), valuations, costs)
    except StructuralError as exc:
        raise SchemaError(str(exc)) from exc


def _parse_arrival(market: Market, data: dict) -> OnlineInstance:
    _reject_unknown(data, _ARRIVAL_FIELDS, "arrival")
    model = _require(data, "model", "arrival")
    order = _require(data, "order", "arrival")
    free_disposal = data.get("free_disposal", False)
    if not isinstance(free_disposal, bool):
        raise SchemaError("'free_disposal' must be a boolean")
    if not isinstance(order, list):
        raise SchemaError("'order' must be a list")
    if model == EDGE:
        try:
            parsed = tuple((int(i), int(j)) for i, j in order)
        except (TypeError, ValueError) as exc:
            raise SchemaError("edge arrival order must list [buyer, seller] pairs") from exc
    else:
        try:
            parsed = tuple(int(i) for i in order)
        except (TypeError, ValueError) as exc:
            raise SchemaError("vertex arrival order must list buyer indices") from exc
    try:
        instance = OnlineInstance(market, model, parsed, free_disposal)
    except StructuralError as exc:
        raise SchemaError(str(exc)) from exc
    claimed = data.get("vertex_weighted")
    if claimed is True and not instance.vertex_weighted:
        raise SchemaError(
            "file claims vertex_weighted but some seller has unequal positive surpluses"
        )
    return instance


def loads(text: str) -> Union[Market, OnlineInstance]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError("instance file must contain a JSON object")
    market = _parse_market(data)
    if "arrival" not in data:
        return market
    arrival = data["arrival"]
    if not isinstance(arrival, dict):
        raise SchemaError("'arrival' must be an object")
    return _parse_arrival(market, arrival)


def load_instance(path) -> Union[Market, OnlineInstance]:
    """Load a market or online instance from a JSON file."""
    return loads(Path(path).read_text())


def dumps(obj: Union[Market, OnlineInstance]) -> str:
    market = obj.market if isinstance(obj, OnlineInstance) else obj
    data: dict = {
        "buyers": list(market.buyer_ids),
        "sellers": [
            {"name": name, "cost": float(c)}
            for name, c in zip(market.seller_ids, market.c)
        ],
        "valuations": [[float(x) for x in row] for row in market.h],
    }
    if isinstance(obj, OnlineInstance):
        order = [list(e) for e in obj.order] if obj.model == EDGE else list(obj.order)
        data["arrival"] = {
            "model": obj.model,
            "order": order,
            "free_disposal": obj.free_disposal,
            "vertex_weighted": obj.vertex_weighted,
        }
    return json.dumps(data, indent=2) + "\n"


def save_instance(obj: Union[Market, OnlineInstance], path) -> None:
    """Write a market or online instance as canonical JSON."""
    Path(path).write_text(dumps(obj))
