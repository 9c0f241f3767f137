"""Pydantic models for the on-disk B-Rep document (``format_version`` "1").

These mirror the JSON layout one-to-one; :mod:`src.brep.io` converts them to
the frozen domain entities in :mod:`src.brep.model`.
"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict

FORMAT_VERSION = "1"
FILE_SUFFIX = ".brep.json"


class _Doc(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True)


class SurfaceDoc(_Doc):
    kind: Literal["plane", "cylinder", "cone", "sphere", "torus", "other"]
    params: dict[str, Any]
    uv_domain: tuple[float, float, float, float]


class LabelsDoc(_Doc):
    op_type: int
    op_step: int


class FaceDoc(_Doc):
    id: int
    surface: SurfaceDoc
    loops: list[list[int]]
    labels: LabelsDoc | None


class CurveDoc(_Doc):
    kind: Literal["line", "arc", "other"]
    params: dict[str, Any]


class EdgeDoc(_Doc):
    id: int
    curve: CurveDoc
    coedges: tuple[int, int]
    convexity: Literal["convex", "concave", "smooth"]
    closed: bool


class CoedgeDoc(_Doc):
    id: int
    edge: int
    face: int
    next: int
    prev: int
    mate: int
    reversed: bool


class BRepDoc(_Doc):
    format_version: Literal["1"]
    name: str
    vocabulary: list[str]
    faces: list[FaceDoc]
    edges: list[EdgeDoc]
    coedges: list[CoedgeDoc]
