"""Recover 2D extrusion profiles from per-face op.type / op.step predictions.

Faces predicted as extrusion sides are grouped by predicted step. Each
group's side normals give the sweep axis; the group's boundary edges,
projected onto the plane orthogonal to that axis, give the profile.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np

from src.brep.geometry import coedge_points, curve_length, curve_points, face_area, face_normal_at_center
from src.brep.model import BRep
from src.errors import DegenerateAxis, ShapeError, UnsupportedSurface
from src.features.extract import sample_uv_grid
from src.model.prediction import Prediction

logger = logging.getLogger(__name__)

SketchStatus = Literal["ok", "fallback", "degenerate"]

SIDE_TYPES = ("extrude_side",)
CUT_SIDE_TYPES = ("cut_extrude_side",)
PARALLEL_TOL = 1e-8
POINT_TOL = 1e-12


@dataclass(frozen=True)
class Sketch:
    """One recovered profile.

    ``segments`` has shape ``(m, 2, 2)``: point pairs in the ``(u, v)``
    basis of the plane through ``origin`` orthogonal to ``axis``.
    """

    step_id: int
    axis: np.ndarray
    origin: np.ndarray
    basis: tuple[np.ndarray, np.ndarray]
    segments: np.ndarray
    source_faces: tuple[int, ...]
    status: SketchStatus = "ok"
    points: np.ndarray | None = None

    def project_points(self, points: np.ndarray) -> np.ndarray:
        return project_points(points, self.origin, self.basis)

    def lift_segments(self) -> np.ndarray:
        """Segments back in model coordinates, shape ``(m, 2, 3)``."""
        u, v = self.basis
        return self.origin + self.segments[..., :1] * u + self.segments[..., 1:] * v


def group_extrude_sides(pred: Prediction, include_cuts: bool = False) -> dict[int, list[int]]:
    """Face ids predicted as extrusion sides, keyed by predicted step."""
    wanted = SIDE_TYPES + (CUT_SIDE_TYPES if include_cuts else ())
    groups: dict[int, list[int]] = {}
    for face_id, (t, s) in enumerate(zip(pred.op_type.tolist(), pred.op_step.tolist(), strict=True)):
        if pred.vocabulary[t] in wanted:
            groups.setdefault(int(s), []).append(face_id)
    return {s: groups[s] for s in sorted(groups)}


def extrusion_axis(normals: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Sum of pairwise normal cross products, each sign-aligned to the first.

    Raises:
        DegenerateAxis: Fewer than two normals or every pair parallel.
    """
    ns = np.asarray(normals, dtype=np.float64).reshape(-1, 3)
    if len(ns) < 2:
        raise DegenerateAxis(f"need at least two normals, got {len(ns)}")
    total = np.zeros(3)
    reference: np.ndarray | None = None
    for i in range(len(ns)):
        for j in range(i + 1, len(ns)):
            cross = np.cross(ns[i], ns[j])
            norm = float(np.linalg.norm(cross))
            if norm <= PARALLEL_TOL:
                continue
            term = cross / norm
            if reference is None:
                reference = term
            elif float(term @ reference) < 0.0:
                term = -term
            total += term
    norm = float(np.linalg.norm(total))
    if reference is None or norm <= PARALLEL_TOL:
        raise DegenerateAxis("all side normals are parallel")
    return total / norm


def projection_origin(b: BRep, face_ids: Sequence[int], grid_resolution: int = 5) -> np.ndarray:
    """Area-weighted centroid of the faces' UV-grid samples."""
    if not face_ids:
        raise ShapeError("projection origin needs at least one face")
    weighted = np.zeros(3)
    total = 0.0
    for fid in face_ids:
        face = b.faces[fid]
        area = face_area(b, face)
        weighted += area * sample_uv_grid(face, grid_resolution).points.reshape(-1, 3).mean(axis=0)
        total += area
    if total <= 0.0:
        return np.mean([sample_uv_grid(b.faces[f], grid_resolution).points.reshape(-1, 3).mean(axis=0) for f in face_ids], axis=0)
    return weighted / total


def plane_basis(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal ``(u, v)`` with ``u = axis x e`` for the standard axis ``e`` least aligned with *axis*."""
    e = np.eye(3)[int(np.argmin(np.abs(axis)))]
    u = np.cross(axis, e)
    u /= np.linalg.norm(u)
    return u, np.cross(axis, u)


def project_points(points: np.ndarray, origin: np.ndarray, basis: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    d = np.asarray(points, dtype=np.float64) - origin
    return np.stack([d @ basis[0], d @ basis[1]], axis=-1)


def _side_normals(b: BRep, face_ids: Sequence[int]) -> list[np.ndarray]:
    normals: list[np.ndarray] = []
    for fid in face_ids:
        try:
            normals.append(face_normal_at_center(b.faces[fid].surface))
        except UnsupportedSurface:
            logger.debug("Skipping face without analytic normal", extra={"face_id": fid})
    return normals


def shared_edge_axis(b: BRep, face_ids: Sequence[int]) -> np.ndarray | None:
    """Direction of the longest straight edge bounding two faces of the group."""
    members = set(face_ids)
    best: tuple[float, int] | None = None
    for edge in b.edges:
        if edge.curve.kind != "line":
            continue
        faces = {b.coedges[c].face_id for c in edge.coedge_ids}
        if len(faces) != 2 or not faces <= members:
            continue
        length = curve_length(edge.curve)
        if length > POINT_TOL and (best is None or length > best[0]):
            best = (length, edge.id)
    if best is None:
        return None
    ends = curve_points(b.edges[best[1]].curve, np.array([0.0, 1.0]))
    d = ends[1] - ends[0]
    return d / np.linalg.norm(d)


def _boundary_segments(b: BRep, face_ids: Sequence[int], samples: int) -> list[tuple[np.ndarray, np.ndarray]]:
    segments: list[tuple[np.ndarray, np.ndarray]] = []
    for fid in face_ids:
        for loop in b.faces[fid].loops:
            for cid in loop:
                pts = coedge_points(b, b.coedges[cid], samples)
                segments.extend((pts[i], pts[i + 1]) for i in range(len(pts) - 1))
    return segments


def _project_segments(segments: Sequence[tuple[np.ndarray, np.ndarray]], origin: np.ndarray, basis: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    out: list[np.ndarray] = []
    seen: set[tuple[float, ...]] = set()
    for p, q in segments:
        pq = project_points(np.stack([p, q]), origin, basis)
        if float(np.linalg.norm(pq[1] - pq[0])) <= 1e-9:
            continue
        a, c = (tuple(np.round(x, 9) + 0.0) for x in pq)
        key = a + c if a <= c else c + a
        if key in seen:
            continue
        seen.add(key)
        out.append(pq)
    return np.array(out).reshape(-1, 2, 2)


def recover_sketches(
    b: BRep,
    pred: Prediction,
    samples: int = 16,
    *,
    include_cuts: bool = False,
    project_grid: bool = False,
    grid_resolution: int = 5,
) -> list[Sketch]:
    """One sketch per predicted step that has extrusion-side faces.

    Groups whose normals are all parallel fall back to the longest shared
    straight edge for the axis (status ``fallback``); groups without one
    come back ``degenerate`` with no segments.
    """
    if pred.n_faces != b.n_faces:
        raise ShapeError(f"prediction covers {pred.n_faces} faces, model has {b.n_faces}")
    sketches: list[Sketch] = []
    for step, face_ids in group_extrude_sides(pred, include_cuts).items():
        status: SketchStatus = "ok"
        try:
            axis = extrusion_axis(_side_normals(b, face_ids))
        except DegenerateAxis:
            fallback = shared_edge_axis(b, face_ids)
            if fallback is None:
                logger.info("Degenerate sketch group", extra={"model_name": b.name, "step": step, "n_faces": len(face_ids)})
                sketches.append(
                    Sketch(
                        step_id=step,
                        axis=np.array([0.0, 0.0, 1.0]),
                        origin=projection_origin(b, face_ids, grid_resolution),
                        basis=(np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])),
                        segments=np.zeros((0, 2, 2)),
                        source_faces=tuple(face_ids),
                        status="degenerate",
                    )
                )
                continue
            axis, status = fallback, "fallback"
        origin = projection_origin(b, face_ids, grid_resolution)
        basis = plane_basis(axis)
        segments = _project_segments(_boundary_segments(b, face_ids, samples), origin, basis)
        points = None
        if project_grid:
            grids = [sample_uv_grid(b.faces[f], grid_resolution).points.reshape(-1, 3) for f in face_ids]
            points = project_points(np.concatenate(grids), origin, basis)
        sketches.append(
            Sketch(
                step_id=step,
                axis=axis,
                origin=origin,
                basis=basis,
                segments=segments,
                source_faces=tuple(face_ids),
                status=status,
                points=points,
            )
        )
    return sketches


# ---------------------------------------------------------------------------
# Profile deviation
# ---------------------------------------------------------------------------


def polygon_segments(points: np.ndarray) -> np.ndarray:
    """Closed polygon ``(n, d)`` as ``(n, 2, d)`` segments."""
    pts = np.asarray(points, dtype=np.float64)
    return np.stack([pts, np.roll(pts, -1, axis=0)], axis=1)


def _point_segment_distance(points: np.ndarray, segments: np.ndarray) -> np.ndarray:
    a, b = segments[:, 0], segments[:, 1]
    ab = b - a
    denom = np.maximum(np.sum(ab * ab, axis=1), POINT_TOL)
    ap = points[:, None, :] - a[None]
    t = np.clip(np.sum(ap * ab[None], axis=2) / denom[None], 0.0, 1.0)
    closest = a[None] + t[..., None] * ab[None]
    return np.linalg.norm(points[:, None, :] - closest, axis=2).min(axis=1)


def _sample_segments(segments: np.ndarray, samples: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, samples)[None, :, None]
    return (segments[:, :1] + t * (segments[:, 1:] - segments[:, :1])).reshape(-1, segments.shape[-1])


def segment_hausdorff(a: np.ndarray, b: np.ndarray, samples: int = 16) -> float:
    """Symmetric Hausdorff distance between two segment sets, sampled per segment."""
    if len(a) == 0 or len(b) == 0:
        raise ShapeError("Hausdorff distance needs two non-empty segment sets")
    forward = _point_segment_distance(_sample_segments(a, samples), b).max()
    backward = _point_segment_distance(_sample_segments(b, samples), a).max()
    return float(max(forward, backward))


def hausdorff_deviation(sketch: Sketch, reference: np.ndarray, samples: int = 16) -> float:
    """Deviation of *sketch* from a closed reference polygon given in model coordinates."""
    ref = polygon_segments(sketch.project_points(np.asarray(reference, dtype=np.float64)))
    return segment_hausdorff(sketch.segments, ref, samples)


def sketch_deviation(sketch: Sketch, reference: Sketch, samples: int = 16) -> float:
    """Deviation of *sketch* from another sketch, measured in *sketch*'s plane."""
    ref = sketch.project_points(reference.lift_segments())
    return segment_hausdorff(sketch.segments, ref, samples)
