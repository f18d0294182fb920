"""JSON configuration documents: schema, validation and conversion to geometric objects."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from . import expr as ex
from .expr import Chart, Expr
from .lorentz3 import Coframe3, FormField

IDENT = r"^[A-Za-z_][A-Za-z0-9_]*$"
_EXPR = {"type": "string", "minLength": 1}
_TRIPLE = {"type": "array", "items": _EXPR, "minItems": 3, "maxItems": 3}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "kundtkit configuration document",
    "type": "object",
    "additionalProperties": False,
    "required": ["coords", "box", "coframe", "f", "mode"],
    "properties": {
        "description": {"type": "string"},
        "mode": {"enum": ["coframe", "nsns", "susy"]},
        "coords": {
            "type": "array",
            "items": {"type": "string", "pattern": IDENT},
            "minItems": 3,
            "maxItems": 3,
            "uniqueItems": True,
        },
        "box": {
            "type": "array",
            "minItems": 3,
            "maxItems": 3,
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        },
        "parameters": {
            "type": "object",
            "propertyNames": {"pattern": IDENT},
            "additionalProperties": {"type": "number"},
        },
        "domain_predicate": _EXPR,
        "coframe": {
            "type": "object",
            "additionalProperties": False,
            "required": ["u", "v", "n"],
            "properties": {"u": _TRIPLE, "v": _TRIPLE, "n": _TRIPLE},
        },
        "f": _EXPR,
        "kappa": {
            "oneOf": [
                _TRIPLE,
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["free_v"],
                    "properties": {"free_v": _EXPR},
                },
            ]
        },
        "dilaton": _EXPR,
        "K": _EXPR,
        "b_field": _TRIPLE,
    },
    "allOf": [
        {"if": {"properties": {"mode": {"const": "nsns"}}}, "then": {"required": ["dilaton"]}},
        {"if": {"properties": {"mode": {"const": "susy"}}}, "then": {"required": ["dilaton", "K"]}},
    ],
}


class DocumentError(ValueError):
    """Schema, parse or scoping problem in a configuration document."""

    def __init__(self, message: str, path: str = "$"):
        self.path = path
        super().__init__(f"{path}: {message}")


def _path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


@dataclass(frozen=True, eq=False)
class Document:
    raw: Mapping[str, Any]
    chart: Chart
    coframe: Coframe3
    f: Expr
    mode: str
    kappa: FormField | None = None
    free_v: Expr | None = None
    dilaton: Expr | None = None
    K: Expr | None = None
    b_field: FormField | None = None


def validate(data: Any) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise DocumentError(err.message, _path(err.absolute_path))


def load(path: str | Path) -> Document:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc.msg} (line {exc.lineno})") from exc
    return from_dict(data)


def from_dict(data: Mapping[str, Any]) -> Document:
    validate(data)
    coords = tuple(data["coords"])
    params = dict(data.get("parameters", {}))
    clash = set(params) & set(coords)
    if clash:
        raise DocumentError(f"parameters shadow coordinates {sorted(clash)}", "$.parameters")
    for k, (lo, hi) in enumerate(data["box"]):
        if not lo <= hi:
            raise DocumentError(f"empty interval [{lo}, {hi}]", f"$.box[{k}]")
    scope = frozenset(coords) | frozenset(params)

    def parse(text: str, where: str) -> Expr:
        try:
            e = ex.parse(text)
        except ex.ParseError as exc:
            raise DocumentError(str(exc), where) from exc
        stray = ex.free_vars(e) - scope
        if stray:
            raise DocumentError(f"unknown identifiers {sorted(stray)}", where)
        return e

    def triple(key: str, values) -> tuple[Expr, Expr, Expr]:
        return tuple(parse(t, f"{key}[{i}]") for i, t in enumerate(values))

    pred = parse(data["domain_predicate"], "$.domain_predicate") if "domain_predicate" in data else None
    chart = Chart(coords, [tuple(b) for b in data["box"]], predicate=pred, params=params)
    cf = data["coframe"]
    forms = [FormField(1, triple(f"$.coframe.{w}", cf[w]), chart) for w in ("u", "v", "n")]
    kappa = free_v = None
    if "kappa" in data:
        k = data["kappa"]
        if isinstance(k, Mapping):
            free_v = parse(k["free_v"], "$.kappa.free_v")
        else:
            kappa = FormField(1, triple("$.kappa", k), chart)
    opt = {key: parse(data[key], f"$.{key}") if key in data else None for key in ("dilaton", "K")}
    b = FormField(2, triple("$.b_field", data["b_field"]), chart) if "b_field" in data else None
    return Document(
        data, chart, Coframe3(*forms), parse(data["f"], "$.f"), data["mode"],
        kappa, free_v, opt["dilaton"], opt["K"], b,
    )


def coframe_document(c: Coframe3, f: Expr, mode: str = "coframe", **extra: Any) -> dict[str, Any]:
    """Serialise a coframe and its data back into a document."""
    chart = c.chart
    doc: dict[str, Any] = {
        "mode": mode,
        "coords": list(chart.coords),
        "box": [list(b) for b in chart.box],
        "coframe": {w: [ex.to_text(x) for x in form.comps] for w, form in zip("uvn", c.forms)},
        "f": ex.to_text(f),
    }
    if chart.predicate is not None:
        doc["domain_predicate"] = ex.to_text(chart.predicate)
    if chart.params:
        doc["parameters"] = dict(chart.params)
    for key, value in extra.items():
        if value is None:
            continue
        if isinstance(value, Expr):
            doc[key] = ex.to_text(value)
        elif isinstance(value, FormField):
            doc[key] = [ex.to_text(x) for x in value.comps]
        else:
            doc[key] = value
    validate(doc)
    return doc


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
