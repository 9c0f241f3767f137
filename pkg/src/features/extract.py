"""Input feature matrices (F, E, C) built from a normalized B-Rep.

Row layouts:

* face   ``[one-hot surface kind (6) | area | grid points (3r^2) | grid normals (3r^2)]``
* edge   ``[one-hot curve kind (3) | one-hot convexity (3) | closed | length | 5 curve points (15)]``
* coedge ``[reversed]``
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from src.brep.geometry import curve_length, curve_points, face_area, surface_points_normals
from src.brep.model import CONVEXITIES, CURVE_KINDS, SURFACE_KINDS, BRep, Coedge, Edge, Face
from src.errors import IoError, UnsupportedSurface
from src.features.normalize import normalize_model

logger = logging.getLogger(__name__)

EDGE_SAMPLES = 5
EDGE_DIM = len(CURVE_KINDS) + len(CONVEXITIES) + 2 + 3 * EDGE_SAMPLES
COEDGE_DIM = 1


def face_dim(r: int) -> int:
    return len(SURFACE_KINDS) + 1 + 6 * r * r


@dataclass(frozen=True)
class UVGrid:
    points: np.ndarray  # (r, r, 3)
    normals: np.ndarray  # (r, r, 3), unit length


@dataclass(frozen=True)
class FeatureMatrices:
    F: np.ndarray
    E: np.ndarray
    C: np.ndarray
    grid_resolution: int

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.F.shape[1], self.E.shape[1], self.C.shape[1]


def _one_hot(index: int, size: int) -> np.ndarray:
    out = np.zeros(size, dtype=np.float64)
    out[index] = 1.0
    return out


def sample_uv_grid(face: Face, r: int) -> UVGrid:
    """Sample *r* x *r* points at uniform parameter steps over the face's ``uv_domain``.

    Endpoints are included; normals are the analytic outward normals.

    Raises:
        UnsupportedSurface: For surfaces of kind ``other``.
    """
    if r < 2:
        raise ValueError(f"grid resolution must be >= 2, got {r}")
    u0, u1, v0, v1 = face.surface.uv_domain
    uu, vv = np.meshgrid(np.linspace(u0, u1, r), np.linspace(v0, v1, r), indexing="ij")
    try:
        points, normals = surface_points_normals(face.surface, uu, vv)
    except UnsupportedSurface as exc:
        raise UnsupportedSurface(f"face {face.id}: {exc.message}") from exc
    return UVGrid(points=points, normals=normals)


def face_feature_row(b: BRep, face: Face, r: int) -> np.ndarray:
    grid = sample_uv_grid(face, r)
    return np.concatenate(
        [
            _one_hot(SURFACE_KINDS.index(face.surface.kind), len(SURFACE_KINDS)),
            [face_area(b, face)],
            grid.points.reshape(-1),
            grid.normals.reshape(-1),
        ]
    )


def edge_feature_row(b: BRep, edge: Edge) -> np.ndarray:
    samples = curve_points(edge.curve, np.linspace(0.0, 1.0, EDGE_SAMPLES))
    return np.concatenate(
        [
            _one_hot(CURVE_KINDS.index(edge.curve.kind), len(CURVE_KINDS)),
            _one_hot(CONVEXITIES.index(edge.convexity), len(CONVEXITIES)),
            [1.0 if edge.closed else 0.0, curve_length(edge.curve)],
            samples.reshape(-1),
        ]
    )


def coedge_feature_row(b: BRep, coedge: Coedge) -> np.ndarray:
    return np.array([1.0 if coedge.reversed else 0.0])


def build_feature_matrices(b: BRep, r: int) -> FeatureMatrices:
    """Assemble (F, E, C) with rows ordered by entity id.

    Raises:
        UnsupportedSurface: Listing every face that has no sampler.
    """
    rows: list[np.ndarray] = []
    failed: list[int] = []
    for face in b.faces:
        try:
            rows.append(face_feature_row(b, face, r))
        except UnsupportedSurface:
            failed.append(face.id)
    if failed:
        raise UnsupportedSurface(f"model {b.name!r}: no sampler for faces {failed}")

    F = np.stack(rows) if rows else np.zeros((0, face_dim(r)))
    E = np.stack([edge_feature_row(b, e) for e in b.edges]) if b.edges else np.zeros((0, EDGE_DIM))
    C = np.stack([coedge_feature_row(b, c) for c in b.coedges]) if b.coedges else np.zeros((0, COEDGE_DIM))
    return FeatureMatrices(F=F, E=E, C=C, grid_resolution=r)


def extract_features(b: BRep, r: int) -> tuple[BRep, FeatureMatrices]:
    """Normalize *b* and build its feature matrices; returns the normalized model too."""
    normalized, _, _ = normalize_model(b)
    return normalized, build_feature_matrices(normalized, r)


def dump_features(fm: FeatureMatrices, path: str | Path) -> None:
    """Write ``{F, E, C, dims}`` as nested arrays for cross-implementation diffing."""
    payload = {
        "F": fm.F.tolist(),
        "E": fm.E.tolist(),
        "C": fm.C.tolist(),
        "dims": list(fm.dims),
        "grid_resolution": fm.grid_resolution,
    }
    try:
        Path(path).write_text(json.dumps(payload), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
