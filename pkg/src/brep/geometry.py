"""Analytic evaluation of the surface and curve kinds carried by B-Rep entities.

Surface parameterizations (``x`` = ``x_axis``, ``y`` = ``axis x x``):

* plane    ``origin + u*x + v*y``; ``y = normal x x``
* cylinder ``origin + radius*(cos u x + sin u y) + v*axis``
* cone     ``origin + (radius + v tan a)*(cos u x + sin u y) + v*axis``
* sphere   ``center + radius*(cos v cos u x + cos v sin u y + sin v axis)``
* torus    ``center + (R + r cos v)*(cos u x + sin u y) + r sin v axis``

Curved kinds carry ``sense`` (+1 / -1) orienting the normal away from or
towards the axis. Curves: ``line`` (start, end), ``arc`` (center, axis,
x_axis, radius, start_angle, end_angle) and ``other`` (polyline ``points``).
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from typing import Any

import numpy as np

from src.brep.model import BBox, BRep, Coedge, CurveGeom, Face, SurfaceGeom
from src.errors import UnsupportedSurface

SURFACE_PARAM_KEYS: dict[str, dict[str, str]] = {
    "plane": {"origin": "point", "normal": "direction", "x_axis": "direction"},
    "cylinder": {"origin": "point", "axis": "direction", "x_axis": "direction", "radius": "positive", "sense": "sign"},
    "cone": {
        "origin": "point",
        "axis": "direction",
        "x_axis": "direction",
        "radius": "positive",
        "half_angle": "angle",
        "sense": "sign",
    },
    "sphere": {"center": "point", "axis": "direction", "x_axis": "direction", "radius": "positive", "sense": "sign"},
    "torus": {
        "center": "point",
        "axis": "direction",
        "x_axis": "direction",
        "major_radius": "positive",
        "minor_radius": "positive",
        "sense": "sign",
    },
}

CURVE_PARAM_KEYS: dict[str, dict[str, str]] = {
    "line": {"start": "point", "end": "point"},
    "arc": {
        "center": "point",
        "axis": "direction",
        "x_axis": "direction",
        "radius": "positive",
        "start_angle": "scalar",
        "end_angle": "scalar",
    },
    "other": {"points": "polyline"},
}

# Keys holding positions or lengths; these move/scale under normalization.
_POINT_KEYS = frozenset({"origin", "center", "start", "end"})
_LENGTH_KEYS = frozenset({"radius", "major_radius", "minor_radius"})


def as_vec(params: Mapping[str, Any], key: str) -> np.ndarray:
    return np.asarray(params[key], dtype=np.float64)


def _frame(axis: np.ndarray, x_axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return x_axis, np.cross(axis, x_axis)


# ---------------------------------------------------------------------------
# Surfaces
# ---------------------------------------------------------------------------


def surface_points_normals(surface: SurfaceGeom, u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate points and unit outward normals at parameter arrays *u*, *v*.

    Returns two arrays of shape ``u.shape + (3,)``.

    Raises:
        UnsupportedSurface: For kind ``other``.
    """
    p = surface.params
    u = np.asarray(u, dtype=np.float64)[..., None]
    v = np.asarray(v, dtype=np.float64)[..., None]
    kind = surface.kind

    if kind == "plane":
        normal = as_vec(p, "normal")
        x, y = _frame(normal, as_vec(p, "x_axis"))
        points = as_vec(p, "origin") + u * x + v * y
        normals = np.broadcast_to(normal, points.shape).copy()
        return points, normals

    if kind == "other":
        raise UnsupportedSurface("surface kind 'other' has no sampler")

    axis = as_vec(p, "axis")
    x, y = _frame(axis, as_vec(p, "x_axis"))
    sense = float(p["sense"])
    radial = np.cos(u) * x + np.sin(u) * y

    if kind == "cylinder":
        points = as_vec(p, "origin") + float(p["radius"]) * radial + v * axis
        normals = sense * radial
    elif kind == "cone":
        alpha = float(p["half_angle"])
        rho = float(p["radius"]) + v * math.tan(alpha)
        points = as_vec(p, "origin") + rho * radial + v * axis
        normals = sense * (math.cos(alpha) * radial - math.sin(alpha) * axis)
    elif kind == "sphere":
        direction = np.cos(v) * radial + np.sin(v) * axis
        points = as_vec(p, "center") + float(p["radius"]) * direction
        normals = sense * direction
    elif kind == "torus":
        r_major = float(p["major_radius"])
        r_minor = float(p["minor_radius"])
        points = as_vec(p, "center") + (r_major + r_minor * np.cos(v)) * radial + r_minor * np.sin(v) * axis
        normals = sense * (np.cos(v) * radial + np.sin(v) * axis)
    else:  # pragma: no cover - kinds are validated by the parser
        raise UnsupportedSurface(f"unknown surface kind {kind!r}")

    normals = normals / np.linalg.norm(normals, axis=-1, keepdims=True)
    return points, normals


def surface_area_from_domain(surface: SurfaceGeom) -> float:
    """Analytic area of the full ``uv_domain`` for curved kinds."""
    u0, u1, v0, v1 = surface.uv_domain
    du = u1 - u0
    p = surface.params
    kind = surface.kind
    if kind == "plane":
        return du * (v1 - v0)
    if kind == "cylinder":
        return float(p["radius"]) * du * (v1 - v0)
    if kind == "cone":
        alpha = float(p["half_angle"])
        r = float(p["radius"])
        t = math.tan(alpha)

        def primitive(v: float) -> float:
            return r * v + 0.5 * t * v * v

        return du * (primitive(v1) - primitive(v0)) / math.cos(alpha)
    if kind == "sphere":
        r = float(p["radius"])
        return r * r * du * (math.sin(v1) - math.sin(v0))
    if kind == "torus":
        r_major = float(p["major_radius"])
        r_minor = float(p["minor_radius"])
        return r_minor * du * (r_major * (v1 - v0) + r_minor * (math.sin(v1) - math.sin(v0)))
    raise UnsupportedSurface(f"no area rule for surface kind {kind!r}")


def face_normal_at_center(surface: SurfaceGeom) -> np.ndarray:
    u0, u1, v0, v1 = surface.uv_domain
    _, normals = surface_points_normals(surface, np.array(0.5 * (u0 + u1)), np.array(0.5 * (v0 + v1)))
    return normals


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------


def curve_points(curve: CurveGeom, t: np.ndarray) -> np.ndarray:
    """Evaluate the curve at normalized parameters ``t`` in [0, 1] (start -> end)."""
    t = np.asarray(t, dtype=np.float64)
    p = curve.params
    if curve.kind == "line":
        start, end = as_vec(p, "start"), as_vec(p, "end")
        return start + t[..., None] * (end - start)
    if curve.kind == "arc":
        x, y = _frame(as_vec(p, "axis"), as_vec(p, "x_axis"))
        a0, a1 = float(p["start_angle"]), float(p["end_angle"])
        theta = (a0 + t * (a1 - a0))[..., None]
        return as_vec(p, "center") + float(p["radius"]) * (np.cos(theta) * x + np.sin(theta) * y)
    pts = np.asarray(p["points"], dtype=np.float64)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total == 0.0:
        return np.broadcast_to(pts[0], t.shape + (3,)).copy()
    s = t * total
    return np.stack([np.interp(s, cum, pts[:, k]) for k in range(3)], axis=-1)


def curve_length(curve: CurveGeom) -> float:
    p = curve.params
    if curve.kind == "line":
        return float(np.linalg.norm(as_vec(p, "end") - as_vec(p, "start")))
    if curve.kind == "arc":
        return float(p["radius"]) * abs(float(p["end_angle"]) - float(p["start_angle"]))
    pts = np.asarray(p["points"], dtype=np.float64)
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


def coedge_points(brep: BRep, coedge: Coedge, n: int) -> np.ndarray:
    """*n* points along the coedge in its traversal direction; lines always give their two end points."""
    edge = brep.edges[coedge.edge_id]
    if edge.curve.kind == "line":
        n = 2
    t = np.linspace(0.0, 1.0, n)
    if coedge.reversed:
        t = t[::-1]
    return curve_points(edge.curve, t)


# ---------------------------------------------------------------------------
# Faces
# ---------------------------------------------------------------------------

_CURVED_EDGE_SAMPLES = 64


def _loop_polyline(brep: BRep, loop: tuple[int, ...]) -> np.ndarray:
    pts: list[np.ndarray] = []
    for cid in loop:
        coedge = brep.coedges[cid]
        kind = brep.edges[coedge.edge_id].curve.kind
        samples = coedge_points(brep, coedge, 2 if kind == "line" else _CURVED_EDGE_SAMPLES)
        pts.append(samples[:-1])
    return np.concatenate(pts, axis=0)


def face_area(brep: BRep, face: Face) -> float:
    """Area of the trimmed face.

    Planar faces integrate their loops (outer counter-clockwise, inner loops
    clockwise about the normal) with the shoelace rule, which is exact for
    straight edges. Curved faces use the analytic area of their ``uv_domain``.
    """
    if face.surface.kind != "plane":
        return surface_area_from_domain(face.surface)
    p = face.surface.params
    normal = as_vec(p, "normal")
    x, y = _frame(normal, as_vec(p, "x_axis"))
    origin = as_vec(p, "origin")
    total = 0.0
    for loop in face.loops:
        poly = _loop_polyline(brep, loop) - origin
        pu, pv = poly @ x, poly @ y
        total += 0.5 * float(np.sum(pu * np.roll(pv, -1) - np.roll(pu, -1) * pv))
    return abs(total)


def compute_bbox(brep: BRep) -> BBox:
    """Axis-aligned bounds of edge curves and sampled curved surfaces."""
    clouds: list[np.ndarray] = []
    for edge in brep.edges:
        n = 2 if edge.curve.kind == "line" else 33
        clouds.append(curve_points(edge.curve, np.linspace(0.0, 1.0, n)))
    for face in brep.faces:
        if face.surface.kind in ("plane", "other"):
            continue
        u0, u1, v0, v1 = face.surface.uv_domain
        uu, vv = np.meshgrid(np.linspace(u0, u1, 9), np.linspace(v0, v1, 9), indexing="ij")
        points, _ = surface_points_normals(face.surface, uu, vv)
        clouds.append(points.reshape(-1, 3))
    if not clouds:
        zero = (0.0, 0.0, 0.0)
        return BBox(lo=zero, hi=zero)
    cloud = np.concatenate(clouds, axis=0)
    lo, hi = cloud.min(axis=0), cloud.max(axis=0)
    return BBox(lo=tuple(float(c) for c in lo), hi=tuple(float(c) for c in hi))  # type: ignore[arg-type]


# ---------------------------------------------------------------------------
# Similarity transform (translate by -center, scale by 1/scale)
# ---------------------------------------------------------------------------


def _tuple3(a: np.ndarray) -> tuple[float, float, float]:
    return (float(a[0]), float(a[1]), float(a[2]))


def _transform_params(params: Mapping[str, Any], center: np.ndarray, scale: float) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, value in params.items():
        if key in _POINT_KEYS:
            out[key] = _tuple3((np.asarray(value, dtype=np.float64) - center) / scale)
        elif key in _LENGTH_KEYS:
            out[key] = float(value) / scale
        elif key == "points":
            out[key] = tuple(_tuple3((np.asarray(pt, dtype=np.float64) - center) / scale) for pt in value)
        else:
            out[key] = value
    return out


def transform_surface(surface: SurfaceGeom, center: np.ndarray, scale: float) -> SurfaceGeom:
    u0, u1, v0, v1 = surface.uv_domain
    if surface.kind == "plane":
        domain = (u0 / scale, u1 / scale, v0 / scale, v1 / scale)
    elif surface.kind in ("cylinder", "cone"):
        domain = (u0, u1, v0 / scale, v1 / scale)
    else:
        domain = surface.uv_domain
    return SurfaceGeom(kind=surface.kind, params=_transform_params(surface.params, center, scale), uv_domain=domain)


def transform_curve(curve: CurveGeom, center: np.ndarray, scale: float) -> CurveGeom:
    return CurveGeom(kind=curve.kind, params=_transform_params(curve.params, center, scale))
