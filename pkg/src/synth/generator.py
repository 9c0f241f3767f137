"""Procedural extrude / pocket solids with per-face ground-truth labels.

A model is a sequence of ``k`` operations. Operation 0 extrudes a convex
profile along +z; every later operation either extrudes a profile standing
on a planar ``extrude_end`` face (a boss) or sinks a rectangular blind pocket
into one. Faces created by operation ``i`` carry ``op_step = i``.

A boss footprint is merged into its host face as an inner loop rather than
splitting the host, so the host keeps its original labels. Every host end
face is packed with disjoint slot disks inside its inscribed disk, one
footprint per slot, and pockets are shallower than the prism they are cut
into, so no two operations ever intersect.

The first operations after the base each take a placement class no earlier
operation used: a boss on the top end, a boss on the bottom end, a pocket.
Once those are spent, operations go to any free slot, bosses included. The
two base ends alone hold 20 slots, so every ``k <= MAX_STEPS`` is placeable.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.brep.io import with_scale_info
from src.brep.model import VOCABULARIES, BRep, Coedge, CurveGeom, Edge, Face, FaceLabels, SurfaceGeom, TypeVocabulary
from src.errors import GenerationRetryExceeded
from src.synth.rng import SplitMix64

logger = logging.getLogger(__name__)

GEN_VOCABULARY: TypeVocabulary = VOCABULARIES["extrude4"]
MAX_STEPS = 16
MAX_PLACEMENT_FAILURES = 100

_CONVEXITY_TOL = 1e-9
_EVEN_GAP_SHARE = 0.8
_RING_SLOTS = 9
# Footprint radius as a fraction of its slot radius
_RHO_MIN, _RHO_MAX = 0.45, 0.8

BOSS_TOP, BOSS_BOTTOM, POCKET = "boss_top", "boss_bottom", "pocket"

Vec3 = tuple[float, float, float]


class GenParams(BaseModel):
    """Sampling parameters for a generated dataset."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: int = 0
    n_models: int = Field(default=100, ge=1)
    steps_min: int = Field(default=1, ge=1)
    steps_max: int = Field(default=4, ge=1)
    profile: Literal["rect", "convex", "mixed"] = "mixed"
    vertices_min: int = Field(default=3, ge=3, le=8)
    vertices_max: int = Field(default=8, ge=3, le=8)
    allow_cut: bool = True
    # Smallest footprint radius, relative to the inscribed radius of the base profile.
    # Capped so the ring slots of the base ends always stay usable.
    min_radius_ratio: float = Field(default=0.01, gt=0.0, le=0.1)

    @model_validator(mode="after")
    def _ranges(self) -> GenParams:
        if not self.steps_min <= self.steps_max <= MAX_STEPS:
            raise ValueError(f"need 1 <= steps_min <= steps_max <= {MAX_STEPS}, got {self.steps_min}..{self.steps_max}")
        if self.vertices_min > self.vertices_max:
            raise ValueError("vertices_min must not exceed vertices_max")
        return self


@dataclass(frozen=True)
class StepRecord:
    """Ground truth for one construction operation.

    ``axis`` is the sweep direction (into the material for cuts) and
    ``profile`` the footprint polygon in model coordinates.
    """

    step: int
    kind: Literal["extrude", "cut"]
    axis: Vec3
    profile: tuple[Vec3, ...]
    height: float
    host_face: int | None
    faces: tuple[int, ...]


@dataclass(frozen=True)
class GeneratedModel:
    brep: BRep
    steps: tuple[StepRecord, ...]

    @property
    def k(self) -> int:
        return len(self.steps)


# ---------------------------------------------------------------------------
# Vector helpers
# ---------------------------------------------------------------------------


def _unit(v: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / norm


def _tuple3(v: np.ndarray) -> Vec3:
    return (float(v[0]), float(v[1]), float(v[2]))


def plane_frame(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal in-plane axes ``(e1, e2)`` with ``e1 x e2 = normal``."""
    ref = np.zeros(3)
    ref[int(np.argmin(np.abs(normal)))] = 1.0
    e1 = _unit(np.cross(ref, normal))
    return e1, np.cross(normal, e1)


def _signed_area(points: Sequence[np.ndarray], normal: np.ndarray) -> float:
    total = np.zeros(3)
    for i, p in enumerate(points):
        total += np.cross(p, points[(i + 1) % len(points)])
    return 0.5 * float(total @ normal)


# ---------------------------------------------------------------------------
# Solid builder
# ---------------------------------------------------------------------------


@dataclass
class _PlanarFace:
    normal: np.ndarray
    loops: list[list[int]]
    op_type: str
    op_step: int
    thickness: float = 0.0  # height of the prism this face caps


@dataclass
class SolidBuilder:
    """Accumulates planar faces as vertex loops and assembles a :class:`BRep`.

    Outer loops run counter-clockwise about the outward normal, inner loops
    clockwise. Each directed vertex pair is used by exactly one face, its
    reverse by the mate.
    """

    vertices: list[np.ndarray] = field(default_factory=list)
    faces: list[_PlanarFace] = field(default_factory=list)
    steps: list[StepRecord] = field(default_factory=list)

    def _add_vertices(self, points: Sequence[np.ndarray]) -> list[int]:
        start = len(self.vertices)
        self.vertices.extend(np.asarray(p, dtype=np.float64) for p in points)
        return list(range(start, len(self.vertices)))

    def _add_face(self, normal: np.ndarray, loop: list[int], op_type: str, step: int, thickness: float = 0.0) -> int:
        self.faces.append(_PlanarFace(normal=_unit(normal), loops=[loop], op_type=op_type, op_step=step, thickness=thickness))
        return len(self.faces) - 1

    def _check_profile(self, points: list[np.ndarray], normal: np.ndarray) -> None:
        if len(points) < 3:
            raise ValueError("a profile needs at least 3 vertices")
        if _signed_area(points, normal) <= 0.0:
            raise ValueError("profile must run counter-clockwise about the sweep direction")

    def _host(self, host: int, normal: np.ndarray) -> _PlanarFace:
        face = self.faces[host]
        if not np.allclose(face.normal, normal, atol=1e-9):
            raise ValueError(f"face {host} normal {face.normal.tolist()} does not match {normal.tolist()}")
        return face

    def outer_polygon(self, face_id: int) -> list[np.ndarray]:
        return [self.vertices[v] for v in self.faces[face_id].loops[0]]

    def extrude(
        self,
        footprint: Sequence[Sequence[float]],
        direction: Sequence[float],
        height: float,
        host: int | None = None,
    ) -> StepRecord:
        """Sweep *footprint* (CCW about *direction*) by *height*.

        Without a host a bottom cap is added; with one the footprint becomes
        an inner loop of the host face.
        """
        n = _unit(np.asarray(direction, dtype=np.float64))
        pts = [np.asarray(p, dtype=np.float64) for p in footprint]
        self._check_profile(pts, n)
        if height <= 0.0:
            raise ValueError("extrusion height must be positive")
        step = len(self.steps)
        bottom = self._add_vertices(pts)
        top = self._add_vertices([p + height * n for p in pts])
        created: list[int] = []
        if host is None:
            created.append(self._add_face(-n, bottom[::-1], "extrude_end", step, height))
        else:
            self._host(host, n).loops.append(bottom[::-1])
        count = len(pts)
        for i in range(count):
            j = (i + 1) % count
            side = np.cross(pts[j] - pts[i], n)
            created.append(self._add_face(side, [bottom[i], bottom[j], top[j], top[i]], "extrude_side", step))
        created.append(self._add_face(n, top, "extrude_end", step, height))
        record = StepRecord(
            step=step,
            kind="extrude",
            axis=_tuple3(n),
            profile=tuple(_tuple3(p) for p in pts),
            height=float(height),
            host_face=host,
            faces=tuple(created),
        )
        self.steps.append(record)
        return record

    def pocket(self, host: int, outline: Sequence[Sequence[float]], depth: float) -> StepRecord:
        """Sink *outline* (CCW about the host normal, on the host plane) by *depth*."""
        face = self.faces[host]
        n = face.normal
        pts = [np.asarray(p, dtype=np.float64) for p in outline]
        self._check_profile(pts, n)
        if not 0.0 < depth < face.thickness:
            raise ValueError(f"pocket depth {depth} must lie in (0, {face.thickness})")
        step = len(self.steps)
        rim = self._add_vertices(pts)
        floor = self._add_vertices([p - depth * n for p in pts])
        face.loops.append(rim[::-1])
        created: list[int] = []
        count = len(pts)
        for i in range(count):
            j = (i + 1) % count
            wall = np.cross(n, pts[j] - pts[i])
            created.append(self._add_face(wall, [rim[i], rim[j], floor[j], floor[i]], "cut_extrude_side", step))
        created.append(self._add_face(n, floor, "cut_extrude_end", step, face.thickness - depth))
        record = StepRecord(
            step=step,
            kind="cut",
            axis=_tuple3(-n),
            profile=tuple(_tuple3(p) for p in pts),
            height=float(depth),
            host_face=host,
            faces=tuple(created),
        )
        self.steps.append(record)
        return record

    # -- assembly ---------------------------------------------------------

    def _surface(self, face: _PlanarFace) -> SurfaceGeom:
        outer = [self.vertices[v] for v in face.loops[0]]
        origin = outer[0]
        x = outer[1] - origin
        x = _unit(x - (x @ face.normal) * face.normal)
        y = np.cross(face.normal, x)
        rel = np.array(outer) - origin
        us, vs = rel @ x, rel @ y
        return SurfaceGeom(
            kind="plane",
            params={"origin": _tuple3(origin), "normal": _tuple3(face.normal), "x_axis": _tuple3(x)},
            uv_domain=(float(us.min()), float(us.max()), float(vs.min()), float(vs.max())),
        )

    def _convexity(self, face_a: int, face_b: int, direction: np.ndarray) -> str:
        na, nb = self.faces[face_a].normal, self.faces[face_b].normal
        s = float(np.cross(na, nb) @ direction) / float(np.linalg.norm(direction))
        if s > _CONVEXITY_TOL:
            return "convex"
        if s < -_CONVEXITY_TOL:
            return "concave"
        return "smooth"

    def build(self, name: str, vocabulary: TypeVocabulary = GEN_VOCABULARY) -> BRep:
        """Assemble the half-edge structure; ids follow face creation order."""
        rows: list[tuple[int, int, int]] = []  # (face, from vertex, to vertex)
        face_loops: list[tuple[tuple[int, ...], ...]] = []
        nxt: dict[int, int] = {}
        for fid, face in enumerate(self.faces):
            loops: list[tuple[int, ...]] = []
            for loop in face.loops:
                ids = list(range(len(rows), len(rows) + len(loop)))
                for i, a in enumerate(loop):
                    rows.append((fid, a, loop[(i + 1) % len(loop)]))
                for i, cid in enumerate(ids):
                    nxt[cid] = ids[(i + 1) % len(ids)]
                loops.append(tuple(ids))
            face_loops.append(tuple(loops))
        prv = {b: a for a, b in nxt.items()}

        by_pair: dict[tuple[int, int], int] = {}
        for cid, (_, a, b) in enumerate(rows):
            if (a, b) in by_pair:
                raise ValueError(f"half-edge {a}->{b} is used by two faces")
            by_pair[(a, b)] = cid

        edge_keys: dict[tuple[int, int], int] = {}
        for _, a, b in rows:
            edge_keys.setdefault((min(a, b), max(a, b)), len(edge_keys))

        coedges: list[Coedge] = []
        for cid, (fid, a, b) in enumerate(rows):
            mate = by_pair.get((b, a))
            if mate is None:
                raise ValueError(f"open shell: half-edge {a}->{b} has no mate")
            coedges.append(
                Coedge(
                    id=cid,
                    edge_id=edge_keys[(min(a, b), max(a, b))],
                    face_id=fid,
                    next_id=nxt[cid],
                    prev_id=prv[cid],
                    mate_id=mate,
                    reversed=a > b,
                )
            )

        edges: list[Edge] = []
        for (lo, hi), eid in edge_keys.items():
            forward, backward = by_pair[(lo, hi)], by_pair[(hi, lo)]
            start, end = self.vertices[lo], self.vertices[hi]
            edges.append(
                Edge(
                    id=eid,
                    curve=CurveGeom(kind="line", params={"start": _tuple3(start), "end": _tuple3(end)}),
                    coedge_ids=(min(forward, backward), max(forward, backward)),
                    convexity=self._convexity(rows[forward][0], rows[backward][0], end - start),  # type: ignore[arg-type]
                    closed=False,
                )
            )

        faces = tuple(
            Face(
                id=fid,
                surface=self._surface(face),
                loops=face_loops[fid],
                labels=FaceLabels(op_type=vocabulary.index(face.op_type), op_step=face.op_step),
            )
            for fid, face in enumerate(self.faces)
        )
        brep = BRep(
            name=name,
            vocabulary=vocabulary.names,
            faces=faces,
            edges=tuple(edges),
            coedges=tuple(coedges),
        )
        return with_scale_info(brep)


# ---------------------------------------------------------------------------
# Profile sampling
# ---------------------------------------------------------------------------


def convex_polygon(rng: SplitMix64, n_vertices: int, radius: float) -> list[tuple[float, float]]:
    """CCW polygon on a circle; every angular gap is at least ``0.8 * 2pi / n``."""
    weights = [rng.random() for _ in range(n_vertices)]
    total = sum(weights)
    if total == 0.0:
        weights, total = [1.0] * n_vertices, float(n_vertices)
    theta = rng.angle()
    points: list[tuple[float, float]] = []
    for w in weights:
        points.append((radius * math.cos(theta), radius * math.sin(theta)))
        theta += 2.0 * math.pi * (_EVEN_GAP_SHARE / n_vertices + (1.0 - _EVEN_GAP_SHARE) * w / total)
    return points


def rectangle(rng: SplitMix64, radius: float) -> list[tuple[float, float]]:
    """CCW rectangle inscribed in a circle, random aspect and orientation."""
    phi = rng.uniform(0.35, 1.2)
    theta = rng.angle()
    angles = (theta - phi, theta + phi, theta + math.pi - phi, theta + math.pi + phi)
    return [(radius * math.cos(a), radius * math.sin(a)) for a in angles]


def _profile(rng: SplitMix64, params: GenParams, radius: float) -> list[tuple[float, float]]:
    use_rect = params.profile == "rect" or (params.profile == "mixed" and rng.random() < 0.5)
    if use_rect:
        return rectangle(rng, radius)
    return convex_polygon(rng, rng.randint(params.vertices_min, params.vertices_max), radius)


def inscribed_disk(polygon: Sequence[np.ndarray], normal: np.ndarray) -> tuple[np.ndarray, float]:
    """A disk inside a convex polygon: vertex mean and its distance to the nearest edge line."""
    center = np.mean(np.asarray(polygon), axis=0)
    radius = math.inf
    for i, p in enumerate(polygon):
        d = _unit(polygon[(i + 1) % len(polygon)] - p)
        inward = np.cross(normal, d)
        radius = min(radius, float((center - p) @ inward))
    return center, radius


def _lift(points2d: Sequence[tuple[float, float]], center: np.ndarray, normal: np.ndarray) -> list[np.ndarray]:
    e1, e2 = plane_frame(normal)
    return [center + x * e1 + y * e2 for x, y in points2d]


@dataclass(eq=False)
class _Slot:
    """A disk on a host face that holds at most one footprint."""

    host: int
    center: np.ndarray
    radius: float


def host_slots(builder: SolidBuilder, host: int, phase: float) -> list[_Slot]:
    """Disjoint disks inside the host's inscribed disk.

    One central disk of half the inscribed radius, ringed by nine of a
    quarter; ring neighbours stay apart because ``1.5 sin(pi/9) > 0.5``.
    """
    normal = builder.faces[host].normal
    center, r_in = inscribed_disk(builder.outer_polygon(host), normal)
    e1, e2 = plane_frame(normal)
    slots = [_Slot(host, center, 0.5 * r_in)]
    for j in range(_RING_SLOTS):
        a = phase + 2.0 * math.pi * j / _RING_SLOTS
        slots.append(_Slot(host, center + 0.75 * r_in * (math.cos(a) * e1 + math.sin(a) * e2), 0.25 * r_in))
    return slots


@dataclass
class _Layout:
    top: int
    bottom: int
    min_radius: float
    slots: list[_Slot] = field(default_factory=list)
    open_classes: list[str] = field(default_factory=list)

    def usable(self, hosts: Sequence[int] | None = None) -> list[_Slot]:
        return [
            s
            for s in self.slots
            if _RHO_MIN * s.radius >= self.min_radius and (hosts is None or s.host in hosts)
        ]


def _place(builder: SolidBuilder, rng: SplitMix64, params: GenParams, layout: _Layout, slot: _Slot, cut: bool) -> None:
    host = builder.faces[slot.host]
    radius = rng.uniform(_RHO_MIN, _RHO_MAX) * slot.radius
    offset = rng.uniform(0.0, 0.9 * (slot.radius - radius))
    e1, e2 = plane_frame(host.normal)
    alpha = rng.angle()
    center = slot.center + offset * (math.cos(alpha) * e1 + math.sin(alpha) * e2)
    if cut:
        depth = host.thickness * rng.uniform(0.15, 0.44)
        builder.pocket(slot.host, _lift(rectangle(rng, radius), center, host.normal), depth)
        return
    height = radius * rng.uniform(0.3, 1.2)
    record = builder.extrude(_lift(_profile(rng, params, radius), center, host.normal), host.normal, height, slot.host)
    layout.slots.extend(host_slots(builder, record.faces[-1], rng.angle()))


def _try_step(builder: SolidBuilder, rng: SplitMix64, params: GenParams, layout: _Layout) -> bool:
    if layout.open_classes:
        kind = rng.choice(layout.open_classes)
        layout.open_classes.remove(kind)
        hosts = {BOSS_TOP: (layout.top,), BOSS_BOTTOM: (layout.bottom,), POCKET: (layout.top, layout.bottom)}[kind]
        candidates = layout.usable(hosts)
        if not candidates:
            return False
        largest = max(s.radius for s in candidates)
        slot = rng.choice([s for s in candidates if s.radius == largest])
        cut = kind == POCKET
    else:
        candidates = layout.usable()
        if not candidates:
            return False
        slot = rng.choice(candidates)
        cut = params.allow_cut and rng.random() < 0.5
    layout.slots.remove(slot)
    _place(builder, rng, params, layout, slot, cut)
    return True


def generate_with_records(seed: int, params: GenParams, name: str | None = None) -> GeneratedModel:
    """Generate one labeled model plus its per-step ground truth.

    Raises:
        GenerationRetryExceeded: After ``MAX_PLACEMENT_FAILURES`` failed placements.
    """
    rng = SplitMix64(seed)
    k = rng.randint(params.steps_min, params.steps_max)
    builder = SolidBuilder()

    base_radius = rng.uniform(1.0, 2.0)
    base = [(x, y, 0.0) for x, y in _profile(rng, params, base_radius)]
    record = builder.extrude(base, (0.0, 0.0, 1.0), base_radius * rng.uniform(0.4, 1.0))
    bottom, top = record.faces[0], record.faces[-1]
    _, base_r_in = inscribed_disk(builder.outer_polygon(top), builder.faces[top].normal)
    layout = _Layout(
        top=top,
        bottom=bottom,
        min_radius=params.min_radius_ratio * base_r_in,
        open_classes=[BOSS_TOP, BOSS_BOTTOM, POCKET] if params.allow_cut else [BOSS_TOP, BOSS_BOTTOM],
    )
    layout.slots = host_slots(builder, top, rng.angle()) + host_slots(builder, bottom, rng.angle())

    failures = 0
    while len(builder.steps) < k:
        if _try_step(builder, rng, params, layout):
            continue
        failures += 1
        if failures >= MAX_PLACEMENT_FAILURES:
            raise GenerationRetryExceeded(
                f"seed {seed}: placement failed {failures} times at step {len(builder.steps)} of {k}"
            )

    model_name = name if name is not None else f"synth-{seed:016x}"
    brep = builder.build(model_name)
    logger.debug("Generated %s: k=%d faces=%d", model_name, k, brep.n_faces)
    return GeneratedModel(brep=brep, steps=tuple(builder.steps))


def generate_model(seed: int, params: GenParams, name: str | None = None) -> BRep:
    """Generate one fully labeled model; deterministic in ``(seed, params)``."""
    return generate_with_records(seed, params, name).brep
