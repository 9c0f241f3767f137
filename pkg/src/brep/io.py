"""Parser and canonical serializer for ``.brep.json`` documents."""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Mapping
from dataclasses import replace
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from src.brep.geometry import CURVE_PARAM_KEYS, SURFACE_PARAM_KEYS, compute_bbox
from src.brep.model import BRep, Coedge, CurveGeom, Edge, Face, FaceLabels, SurfaceGeom
from src.brep.schema import FORMAT_VERSION, BRepDoc, CurveDoc, SurfaceDoc
from src.brep.validation import validate_topology
from src.errors import BRepSyntaxError, IoError, SchemaError, TopologyError

logger = logging.getLogger(__name__)

_UNIT_TOL = 1e-9


# ---------------------------------------------------------------------------
# Parameter checks (kind-specific, after the structural schema passed)
# ---------------------------------------------------------------------------


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, int | float) or not math.isfinite(value):
        raise SchemaError(f"{where}: expected a finite number, got {value!r}")
    return float(value)


def _point(value: Any, where: str) -> tuple[float, float, float]:
    if not isinstance(value, list | tuple) or len(value) != 3:
        raise SchemaError(f"{where}: expected 3 numbers")
    return (_number(value[0], where), _number(value[1], where), _number(value[2], where))


def _convert_params(kind: str, params: Mapping[str, Any], table: dict[str, dict[str, str]], where: str) -> dict:
    if kind == "other" and kind not in table:
        return dict(params)
    expected = table[kind]
    missing = [k for k in expected if k not in params]
    extra = [k for k in params if k not in expected]
    if missing:
        raise SchemaError(f"{where}: missing param(s) {missing} for kind {kind!r}")
    if extra:
        raise SchemaError(f"{where}: unexpected param(s) {extra} for kind {kind!r}")

    out: dict[str, Any] = {}
    for key, rule in expected.items():
        value = params[key]
        at = f"{where}.{key}"
        if rule == "point":
            out[key] = _point(value, at)
        elif rule == "direction":
            vec = _point(value, at)
            if abs(math.sqrt(sum(c * c for c in vec)) - 1.0) > _UNIT_TOL:
                raise SchemaError(f"{at}: direction is not unit length")
            out[key] = vec
        elif rule == "positive":
            num = _number(value, at)
            if num <= 0:
                raise SchemaError(f"{at}: must be > 0")
            out[key] = num
        elif rule == "sign":
            if value not in (1, -1) or isinstance(value, bool):
                raise SchemaError(f"{at}: must be 1 or -1")
            out[key] = int(value)
        elif rule == "angle":
            num = _number(value, at)
            if not abs(num) < math.pi / 2:
                raise SchemaError(f"{at}: must lie in (-pi/2, pi/2)")
            out[key] = num
        elif rule == "polyline":
            if not isinstance(value, list) or len(value) < 2:
                raise SchemaError(f"{at}: expected at least 2 points")
            out[key] = tuple(_point(pt, at) for pt in value)
        else:
            out[key] = _number(value, at)
    reference = "normal" if "normal" in out else "axis"
    if "x_axis" in out and reference in out:
        if abs(sum(a * b for a, b in zip(out["x_axis"], out[reference], strict=True))) > _UNIT_TOL:
            raise SchemaError(f"{where}.x_axis: not orthogonal to {reference}")
    return out


def _surface(doc: SurfaceDoc, where: str) -> SurfaceGeom:
    u0, u1, v0, v1 = doc.uv_domain
    if not all(math.isfinite(x) for x in doc.uv_domain) or u0 > u1 or v0 > v1:
        raise SchemaError(f"{where}.uv_domain: expected finite (u_min, u_max, v_min, v_max) with min <= max")
    params = _convert_params(doc.kind, doc.params, SURFACE_PARAM_KEYS, f"{where}.params")
    return SurfaceGeom(kind=doc.kind, params=params, uv_domain=(u0, u1, v0, v1))


def _curve(doc: CurveDoc, where: str) -> CurveGeom:
    return CurveGeom(kind=doc.kind, params=_convert_params(doc.kind, doc.params, CURVE_PARAM_KEYS, f"{where}.params"))


def _schema_message(exc: ValidationError) -> str:
    first = exc.errors()[0]
    loc = ".".join(str(p) for p in first["loc"]) or "<root>"
    more = f" (+{exc.error_count() - 1} more)" if exc.error_count() > 1 else ""
    return f"{loc}: {first['msg']}{more}"


def _dense(ids: list[int], entity: str) -> None:
    expected = set(range(len(ids)))
    seen: set[int] = set()
    for i in ids:
        if i in seen or i not in expected:
            raise TopologyError("dense ids", entity=entity, entity_id=i)
        seen.add(i)


def _reject_constant(name: str) -> float:
    raise ValueError(f"non-finite constant {name} is not allowed")


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------


def parse_brep(text: str, *, check_topology: bool = True) -> BRep:
    """Parse a canonical B-Rep document and enforce every structural invariant.

    Labels are preserved verbatim (step ids are not densified). With
    ``check_topology=False`` only syntax, schema and dense ids are enforced.

    Raises:
        BRepSyntaxError: Malformed JSON (carries line and offset).
        SchemaError: Missing/extra fields, wrong arity, bad geometry params.
        TopologyError: First violated topology invariant, naming the entity.
    """
    try:
        json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise BRepSyntaxError(exc.msg, line=exc.lineno, offset=exc.colno) from exc
    except ValueError as exc:
        raise BRepSyntaxError(str(exc), line=0, offset=0) from exc

    try:
        doc = BRepDoc.model_validate_json(text)
    except ValidationError as exc:
        raise SchemaError(_schema_message(exc)) from exc

    _dense([f.id for f in doc.faces], "face")
    _dense([e.id for e in doc.edges], "edge")
    _dense([c.id for c in doc.coedges], "coedge")

    faces = tuple(
        Face(
            id=f.id,
            surface=_surface(f.surface, f"faces.{f.id}.surface"),
            loops=tuple(tuple(loop) for loop in f.loops),
            labels=FaceLabels(op_type=f.labels.op_type, op_step=f.labels.op_step) if f.labels else None,
        )
        for f in sorted(doc.faces, key=lambda f: f.id)
    )
    edges = tuple(
        Edge(
            id=e.id,
            curve=_curve(e.curve, f"edges.{e.id}.curve"),
            coedge_ids=e.coedges,
            convexity=e.convexity,
            closed=e.closed,
        )
        for e in sorted(doc.edges, key=lambda e: e.id)
    )
    coedges = tuple(
        Coedge(
            id=c.id,
            edge_id=c.edge,
            face_id=c.face,
            next_id=c.next,
            prev_id=c.prev,
            mate_id=c.mate,
            reversed=c.reversed,
        )
        for c in sorted(doc.coedges, key=lambda c: c.id)
    )
    brep = BRep(name=doc.name, vocabulary=tuple(doc.vocabulary), faces=faces, edges=edges, coedges=coedges)

    if not check_topology:
        return brep
    report = validate_topology(brep)
    if not report.ok:
        v = report.violations[0]
        raise TopologyError(v.rule, entity=v.entity, entity_id=v.entity_id, detail=v.detail)
    return with_scale_info(brep)


def with_scale_info(brep: BRep) -> BRep:
    """Attach the model-unit bounding box."""
    return replace(brep, scale_info=compute_bbox(brep))


# ---------------------------------------------------------------------------
# Canonical serialization
# ---------------------------------------------------------------------------


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} cannot be serialized")
    text = format(x, ".17g")
    if "." not in text and "e" not in text:
        text += ".0"
    return text


def _emit(value: Any, indent: int) -> str:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _fmt_float(value)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, Mapping):
        if not value:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_emit(v, indent + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, list | tuple):
        if not value:
            return "[]"
        if all(isinstance(v, int | float) for v in value):
            return "[" + ", ".join(_emit(v, indent + 1) for v in value) + "]"
        items = [f"{inner}{_emit(v, indent + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _ordered_params(kind: str, params: Mapping[str, Any], table: dict[str, dict[str, str]]) -> dict[str, Any]:
    order = list(table[kind]) if kind in table else sorted(params)
    return {k: params[k] for k in order}


def brep_to_document(b: BRep) -> dict[str, Any]:
    """Schema-ordered plain-data view of *b*."""
    return {
        "format_version": FORMAT_VERSION,
        "name": b.name,
        "vocabulary": list(b.vocabulary),
        "faces": [
            {
                "id": f.id,
                "surface": {
                    "kind": f.surface.kind,
                    "params": _ordered_params(f.surface.kind, f.surface.params, SURFACE_PARAM_KEYS),
                    "uv_domain": [float(x) for x in f.surface.uv_domain],
                },
                "loops": [list(loop) for loop in f.loops],
                "labels": {"op_type": f.labels.op_type, "op_step": f.labels.op_step} if f.labels else None,
            }
            for f in sorted(b.faces, key=lambda f: f.id)
        ],
        "edges": [
            {
                "id": e.id,
                "curve": {"kind": e.curve.kind, "params": _ordered_params(e.curve.kind, e.curve.params, CURVE_PARAM_KEYS)},
                "coedges": list(e.coedge_ids),
                "convexity": e.convexity,
                "closed": e.closed,
            }
            for e in sorted(b.edges, key=lambda e: e.id)
        ],
        "coedges": [
            {
                "id": c.id,
                "edge": c.edge_id,
                "face": c.face_id,
                "next": c.next_id,
                "prev": c.prev_id,
                "mate": c.mate_id,
                "reversed": c.reversed,
            }
            for c in sorted(b.coedges, key=lambda c: c.id)
        ],
    }


def serialize_brep(b: BRep) -> str:
    """Canonical document: schema key order, entities by id, floats at 17 significant digits.

    Raises:
        ValueError: If any coordinate is NaN or infinite.
    """
    return _emit(brep_to_document(b), 0) + "\n"


# ---------------------------------------------------------------------------
# File helpers
# ---------------------------------------------------------------------------


def read_brep(path: str | Path, *, check_topology: bool = True) -> BRep:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    logger.debug("Parsing %s", path)
    return parse_brep(text, check_topology=check_topology)


def write_brep(b: BRep, path: str | Path) -> None:
    try:
        Path(path).write_text(serialize_brep(b), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
