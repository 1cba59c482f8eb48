"""JSON encodings of field contexts, ovoid files and certificates."""

from __future__ import annotations

import json

from .errors import HermovoidError
from .geometry import Point, PointSet
from .gf import FieldCtx, Params, build_field_ctx, primitive_modulus


class FormatError(HermovoidError, ValueError):
    """A JSON document does not match the expected layout."""


def dumps(data) -> str:
    """Key-sorted, deterministic JSON text."""
    return json.dumps(data, sort_keys=True, indent=1) + "\n"


def ctx_from_json(data: dict) -> FieldCtx:
    try:
        params = Params(int(data["p"]), int(data["d"]), int(data["n"]))
        modulus = tuple(int(c) for c in data["modulus"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad field description: {exc}") from exc
    if modulus == primitive_modulus(params.p, params.degree):
        return build_field_ctx(params)
    return FieldCtx(params, modulus)


def ovoid_to_json(ctx: FieldCtx, S: PointSet) -> dict:
    data = ctx.to_json()
    data["points"] = [P.to_json(ctx) for P in S]
    return data


def ovoid_from_json(data: dict) -> tuple[FieldCtx, PointSet]:
    ctx = ctx_from_json(data)
    try:
        points = [Point.from_json(ctx, item) for item in data["points"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad point list: {exc}") from exc
    return ctx, PointSet.of(ctx, points)


def read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc


def write_json(path: str, data):
    with open(path, "w") as fh:
        fh.write(dumps(data))
