"""Versioned JSON for expressions.

Document shape::

    {"schema": "friedrichs.expression", "version": 1, "stats": "fermi",
     "terms": [{"coeff": ["-1/2", "0"],
                "diagram": {"vertices": [{"name": "A", "n": 1, "m": 2, "kind": "kernel"}],
                            "lines": [[[0, 1], [1, 2]]],
                            "ext_left": [[0, 1]], "ext_right": [[0, 2]]}}]}

Composite kernels carry their source diagram under ``"provenance"``.
"""

from __future__ import annotations

import json
from typing import Any

from .coefficient import Coefficient
from .diagram import CollapseRecord, Diagram, InvalidDiagramError
from .expression import Expression, Term, canonicalize
from .symbols import KernelKind, KernelSymbol, Side, SlotRef, Statistics

__all__ = ["SCHEMA", "VERSION", "SchemaError", "VersionError", "to_json", "from_json", "expression_to_data", "expression_from_data"]

SCHEMA = "friedrichs.expression"
VERSION = 1


class SchemaError(ValueError):
    """Malformed document; ``location`` is a JSON path or ``line:col``."""

    def __init__(self, message: str, location: str):
        super().__init__(f"{location}: {message}")
        self.location = location
        self.reason = message


class VersionError(SchemaError):
    pass


def _vertex_data(k: KernelSymbol) -> dict:
    out: dict[str, Any] = {"name": k.name, "n": k.n_left, "m": k.m_right, "kind": k.kind.value}
    if k.provenance is not None and k.provenance.source is not None and k.provenance.composite is k:
        out["provenance"] = _diagram_data(k.provenance.source)
    return out


def _diagram_data(d: Diagram) -> dict:
    return {
        "vertices": [_vertex_data(v) for v in d.vertices],
        "lines": [[list(a), list(b)] for a, b in d.lines],
        "ext_left": [list(s) for s in d.ext_left],
        "ext_right": [list(s) for s in d.ext_right],
    }


def expression_to_data(e: Expression) -> dict:
    e = canonicalize(e)
    return {
        "schema": SCHEMA,
        "version": VERSION,
        "stats": e.statistics.value,
        "terms": [{"coeff": list(t.coeff.to_pair()), "diagram": _diagram_data(t.diagram)} for t in e.terms],
    }


def to_json(e: Expression, indent: int | None = None) -> str:
    return json.dumps(expression_to_data(e), indent=indent, ensure_ascii=False, sort_keys=True)


def _need(obj, key: str, typ, where: str):
    if not isinstance(obj, dict):
        raise SchemaError("expected an object", where)
    if key not in obj:
        raise SchemaError(f"missing field {key!r}", where)
    val = obj[key]
    if typ is int:
        ok = isinstance(val, int) and not isinstance(val, bool)
    else:
        ok = isinstance(val, typ)
    if not ok:
        raise SchemaError(f"field {key!r} must be {getattr(typ, '__name__', typ)}", f"{where}.{key}")
    return val


def _slot(raw, where: str) -> tuple[int, int]:
    if (
        not isinstance(raw, list)
        or len(raw) != 2
        or not all(isinstance(x, int) and not isinstance(x, bool) for x in raw)
    ):
        raise SchemaError("slot must be [vertex, index]", where)
    return raw[0], raw[1]


def _vertex(raw, where: str) -> KernelSymbol:
    name = _need(raw, "name", str, where)
    n = _need(raw, "n", int, where)
    m = _need(raw, "m", int, where)
    kind = raw.get("kind", "kernel")
    try:
        kind = KernelKind(kind)
        sym = KernelSymbol(name, n, m, kind)
    except ValueError as exc:
        raise SchemaError(str(exc), where) from None
    if "provenance" in raw:
        src = _diagram(raw["provenance"], f"{where}.provenance")
        if src.legs != (n, m):
            raise SchemaError("provenance legs do not match arity", f"{where}.provenance")
        slot_map = {SlotRef(v, Side.LEFT, i): SlotRef(0, Side.LEFT, j) for j, (v, i) in enumerate(src.ext_left, 1)}
        slot_map.update({SlotRef(v, Side.RIGHT, i): SlotRef(0, Side.RIGHT, j) for j, (v, i) in enumerate(src.ext_right, 1)})
        rec = CollapseRecord(src, None, slot_map)  # type: ignore[arg-type]
        sym = KernelSymbol(name, n, m, kind, rec)
        object.__setattr__(rec, "composite", sym)
    return sym


def _diagram(raw, where: str) -> Diagram:
    verts = _need(raw, "vertices", list, where)
    lines = _need(raw, "lines", list, where)
    el = _need(raw, "ext_left", list, where)
    er = _need(raw, "ext_right", list, where)
    vs = tuple(_vertex(v, f"{where}.vertices[{i}]") for i, v in enumerate(verts))
    ls = []
    for i, ln in enumerate(lines):
        if not isinstance(ln, list) or len(ln) != 2:
            raise SchemaError("line must be [left_slot, right_slot]", f"{where}.lines[{i}]")
        ls.append((_slot(ln[0], f"{where}.lines[{i}][0]"), _slot(ln[1], f"{where}.lines[{i}][1]")))
    d = Diagram(
        vs,
        tuple(ls),
        tuple(_slot(s, f"{where}.ext_left[{i}]") for i, s in enumerate(el)),
        tuple(_slot(s, f"{where}.ext_right[{i}]") for i, s in enumerate(er)),
    )
    try:
        d.validate()
    except InvalidDiagramError as exc:
        raise SchemaError(str(exc), where) from None
    return d


def expression_from_data(doc) -> Expression:
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object", "$")
    if doc.get("schema", SCHEMA) != SCHEMA:
        raise SchemaError(f"unknown schema {doc.get('schema')!r}", "$.schema")
    version = doc.get("version", VERSION)
    if version != VERSION:
        raise VersionError(f"unsupported schema version {version!r} (this build reads {VERSION})", "$.version")
    stats_raw = _need(doc, "stats", str, "$")
    try:
        stats = Statistics.parse(stats_raw)
    except ValueError as exc:
        raise SchemaError(str(exc), "$.stats") from None
    terms = []
    for i, raw in enumerate(_need(doc, "terms", list, "$")):
        where = f"$.terms[{i}]"
        coeff_raw = _need(raw, "coeff", list, where)
        try:
            coeff = Coefficient.from_pair(coeff_raw)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"bad coefficient: {exc}", f"{where}.coeff") from None
        terms.append(Term(coeff, _diagram(_need(raw, "diagram", dict, where), f"{where}.diagram")))
    return canonicalize(Expression(stats, terms))


def from_json(text: str) -> Expression:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(exc.msg, f"{exc.lineno}:{exc.colno}") from None
    return expression_from_data(doc)
