"""Topological walks and id-level transforms over a :class:`BRep`."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from src.brep.model import BRep, Coedge, Edge, Face


@dataclass(frozen=True)
class WalkSet:
    """Winged-edge neighborhood of one coedge.

    ``coedges`` is ordered (c, mate, next, prev, next(mate), prev(mate));
    ``faces`` is (face(c), face(mate)).
    """

    coedges: tuple[int, int, int, int, int, int]
    faces: tuple[int, int]
    edge: int


def kernel_neighborhood(b: BRep, c: int) -> WalkSet:
    if not 0 <= c < b.n_coedges:
        raise IndexError(f"coedge id {c} out of range [0, {b.n_coedges})")
    co = b.coedges[c]
    mate = b.coedges[co.mate_id]
    return WalkSet(
        coedges=(co.id, mate.id, co.next_id, co.prev_id, mate.next_id, mate.prev_id),
        faces=(co.face_id, mate.face_id),
        edge=co.edge_id,
    )


@dataclass(frozen=True)
class WalkIndex:
    """Dense index arrays realizing the walk set for every coedge at once."""

    coedges: np.ndarray  # (N_c, 6)
    faces: np.ndarray  # (N_c, 2)
    edges: np.ndarray  # (N_c,)
    coedge_face: np.ndarray  # (N_c,) owning face, the face pooling segment
    coedge_edge: np.ndarray  # (N_c,) parent edge, the edge pooling segment


def build_walk_index(b: BRep) -> WalkIndex:
    nxt = np.array([c.next_id for c in b.coedges], dtype=np.int64)
    prv = np.array([c.prev_id for c in b.coedges], dtype=np.int64)
    mate = np.array([c.mate_id for c in b.coedges], dtype=np.int64)
    face = np.array([c.face_id for c in b.coedges], dtype=np.int64)
    edge = np.array([c.edge_id for c in b.coedges], dtype=np.int64)
    ids = np.arange(b.n_coedges, dtype=np.int64)
    return WalkIndex(
        coedges=np.stack([ids, mate, nxt, prv, nxt[mate], prv[mate]], axis=1),
        faces=np.stack([face, face[mate]], axis=1),
        edges=edge,
        coedge_face=face,
        coedge_edge=edge,
    )


# ---------------------------------------------------------------------------
# Labels
# ---------------------------------------------------------------------------


def canonical_step_labels(b: BRep) -> np.ndarray:
    """Densify on-disk step ids to 0..k-1 in order of first appearance by face id."""
    mapping: dict[int, int] = {}
    out = np.empty(b.n_faces, dtype=np.int64)
    for f in b.faces:
        if f.labels is None:
            raise ValueError(f"face {f.id} has no labels")
        out[f.id] = mapping.setdefault(f.labels.op_step, len(mapping))
    return out


def type_labels(b: BRep) -> np.ndarray:
    out = np.empty(b.n_faces, dtype=np.int64)
    for f in b.faces:
        if f.labels is None:
            raise ValueError(f"face {f.id} has no labels")
        out[f.id] = f.labels.op_type
    return out


def n_steps(b: BRep) -> int:
    return len({f.labels.op_step for f in b.faces if f.labels is not None})


# ---------------------------------------------------------------------------
# Relabeling
# ---------------------------------------------------------------------------


def permute_ids(
    b: BRep,
    face_perm: Sequence[int],
    edge_perm: Sequence[int],
    coedge_perm: Sequence[int],
) -> BRep:
    """Return the same solid with ids renamed: old id ``i`` becomes ``perm[i]``.

    Entities are re-sorted by their new ids; geometry, loop order and labels
    are unchanged.
    """
    fp, ep, cp = list(face_perm), list(edge_perm), list(coedge_perm)
    faces = sorted(
        (
            Face(
                id=fp[f.id],
                surface=f.surface,
                loops=tuple(tuple(cp[c] for c in loop) for loop in f.loops),
                labels=f.labels,
            )
            for f in b.faces
        ),
        key=lambda f: f.id,
    )
    edges = sorted(
        (
            Edge(
                id=ep[e.id],
                curve=e.curve,
                coedge_ids=(cp[e.coedge_ids[0]], cp[e.coedge_ids[1]]),
                convexity=e.convexity,
                closed=e.closed,
            )
            for e in b.edges
        ),
        key=lambda e: e.id,
    )
    coedges = sorted(
        (
            Coedge(
                id=cp[c.id],
                edge_id=ep[c.edge_id],
                face_id=fp[c.face_id],
                next_id=cp[c.next_id],
                prev_id=cp[c.prev_id],
                mate_id=cp[c.mate_id],
                reversed=c.reversed,
            )
            for c in b.coedges
        ),
        key=lambda c: c.id,
    )
    return replace(b, faces=tuple(faces), edges=tuple(edges), coedges=tuple(coedges))
