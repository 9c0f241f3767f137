"""B-Rep topology data model.

All entities are frozen; a :class:`BRep` is never mutated after construction.
Vectors are stored as tuples of floats so that two structurally identical
models compare equal with ``==``.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Literal

SurfaceKind = Literal["plane", "cylinder", "cone", "sphere", "torus", "other"]
CurveKind = Literal["line", "arc", "other"]
Convexity = Literal["convex", "concave", "smooth"]

SURFACE_KINDS: tuple[str, ...] = ("plane", "cylinder", "cone", "sphere", "torus", "other")
CURVE_KINDS: tuple[str, ...] = ("line", "arc", "other")
CONVEXITIES: tuple[str, ...] = ("convex", "concave", "smooth")

Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class SurfaceGeom:
    """Parametric surface carrying a face.

    ``params`` is kind-specific (see :mod:`src.brep.geometry`); directions
    are unit vectors and the plane ``normal`` is the outward face normal.
    """

    kind: SurfaceKind
    params: Mapping[str, Any]
    uv_domain: tuple[float, float, float, float]


@dataclass(frozen=True)
class CurveGeom:
    kind: CurveKind
    params: Mapping[str, Any]


@dataclass(frozen=True)
class FaceLabels:
    op_type: int
    op_step: int


@dataclass(frozen=True)
class Face:
    id: int
    surface: SurfaceGeom
    loops: tuple[tuple[int, ...], ...]  # first loop is the outer loop
    labels: FaceLabels | None = None

    @property
    def coedge_ids(self) -> tuple[int, ...]:
        return tuple(c for loop in self.loops for c in loop)


@dataclass(frozen=True)
class Edge:
    id: int
    curve: CurveGeom
    coedge_ids: tuple[int, int]
    convexity: Convexity
    closed: bool = False


@dataclass(frozen=True)
class Coedge:
    id: int
    edge_id: int
    face_id: int
    next_id: int
    prev_id: int
    mate_id: int
    reversed: bool


@dataclass(frozen=True)
class BBox:
    lo: Vec3
    hi: Vec3

    @property
    def extent(self) -> Vec3:
        return (self.hi[0] - self.lo[0], self.hi[1] - self.lo[1], self.hi[2] - self.lo[2])

    @property
    def center(self) -> Vec3:
        return (
            0.5 * (self.lo[0] + self.hi[0]),
            0.5 * (self.lo[1] + self.hi[1]),
            0.5 * (self.lo[2] + self.hi[2]),
        )


@dataclass(frozen=True)
class BRep:
    name: str
    vocabulary: tuple[str, ...]
    faces: tuple[Face, ...]
    edges: tuple[Edge, ...]
    coedges: tuple[Coedge, ...]
    scale_info: BBox | None = field(default=None, compare=False)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_coedges(self) -> int:
        return len(self.coedges)

    @cached_property
    def face_coedges(self) -> tuple[tuple[int, ...], ...]:
        """Coedge ids owned by each face, ascending."""
        owned: list[list[int]] = [[] for _ in self.faces]
        for c in self.coedges:
            owned[c.face_id].append(c.id)
        return tuple(tuple(sorted(ids)) for ids in owned)

    def is_labeled(self) -> bool:
        return bool(self.faces) and all(f.labels is not None for f in self.faces)


# ---------------------------------------------------------------------------
# Operation type vocabulary
# ---------------------------------------------------------------------------

EXTRUDE_TYPES: tuple[str, ...] = ("extrude_side", "extrude_end", "cut_extrude_side", "cut_extrude_end")

FULL_TYPES: tuple[str, ...] = (
    "extrude_side",
    "extrude_end",
    "revolve_side",
    "revolve_end",
    "cut_extrude_side",
    "cut_extrude_end",
    "cut_revolve_side",
    "cut_revolve_end",
    "fillet",
    "chamfer",
    "other",
)


def default_group(name: str) -> str:
    """``extrude_side`` / ``extrude_end`` -> ``extrude``; other names map to themselves."""
    for suffix in ("_side", "_end"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return name


@dataclass(frozen=True)
class TypeVocabulary:
    names: tuple[str, ...]
    grouping: Mapping[str, str]

    def __post_init__(self) -> None:
        missing = [n for n in self.names if n not in self.grouping]
        if missing:
            raise ValueError(f"grouping is not total: missing {missing}")
        if len(set(self.names)) != len(self.names):
            raise ValueError("vocabulary names must be unique")

    @classmethod
    def from_names(cls, names: Sequence[str]) -> TypeVocabulary:
        return cls(names=tuple(names), grouping={n: default_group(n) for n in names})

    @property
    def k_t(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    @cached_property
    def group_names(self) -> tuple[str, ...]:
        """Grouped super-types in order of first appearance."""
        seen: dict[str, None] = {}
        for n in self.names:
            seen.setdefault(self.grouping[n], None)
        return tuple(seen)


VOCABULARIES: dict[str, TypeVocabulary] = {
    "extrude4": TypeVocabulary.from_names(EXTRUDE_TYPES),
    "cc3d11": TypeVocabulary.from_names(FULL_TYPES),
}
