"""Winged-edge convolution producing per-face embeddings.

Per layer every coedge gathers the states of its walk set (itself, mate,
next, prev, next of mate, prev of mate, both adjacent faces and its edge),
passes the concatenation through ``relu(affine)``, and faces / edges
max-pool the new states of the coedges they own. The edge update of the
last layer is never read, so it is not computed.
"""

from __future__ import annotations

import numpy as np

from src.brep.topology import WalkIndex
from src.errors import ShapeError, TopologyError
from src.features.extract import FeatureMatrices
from src.nn import autograd as ag
from src.nn.params import ModelParams

WALK_WIDTH = 9


def add_backbone_params(
    params: ModelParams,
    prefix: str,
    dims: tuple[int, int, int],
    hidden: int,
    d_emb: int,
    n_layers: int,
    rng: np.random.Generator,
) -> None:
    d_f, d_e, d_c = dims
    params.add_affine(f"{prefix}.in_face", d_f, hidden, rng)
    params.add_affine(f"{prefix}.in_edge", d_e, hidden, rng)
    params.add_affine(f"{prefix}.in_coedge", d_c, hidden, rng)
    for layer in range(n_layers):
        last = layer == n_layers - 1
        params.add_affine(f"{prefix}.layer{layer}.coedge", WALK_WIDTH * hidden, hidden, rng)
        params.add_affine(f"{prefix}.layer{layer}.face", hidden, d_emb if last else hidden, rng)
        if not last:
            params.add_affine(f"{prefix}.layer{layer}.edge", hidden, hidden, rng)


def _affine(x: ag.Tensor, params: ModelParams, name: str) -> ag.Tensor:
    return ag.affine(x, ag.param(params[f"{name}.W"]), ag.param(params[f"{name}.b"]))


def check_faces_have_coedges(walk: WalkIndex, n_faces: int) -> None:
    counts = np.bincount(walk.coedge_face, minlength=n_faces)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise TopologyError("face has coedges", entity="face", entity_id=int(empty[0]))


def backbone_forward(
    fm: FeatureMatrices,
    walk: WalkIndex,
    params: ModelParams,
    *,
    prefix: str = "backbone",
    n_layers: int,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
) -> ag.Tensor:
    """Return the per-face embeddings (N_f x d_emb).

    Raises:
        ShapeError: Feature rows disagree with the walk index.
        TopologyError: A face owns no coedge.
    """
    n_faces, n_edges = fm.F.shape[0], fm.E.shape[0]
    if fm.C.shape[0] != walk.coedges.shape[0] or (n_edges and int(walk.edges.max()) >= n_edges):
        raise ShapeError(f"features ({fm.F.shape[0]}, {n_edges}, {fm.C.shape[0]}) do not match the walk index")
    check_faces_have_coedges(walk, n_faces)

    h_face = _affine(ag.constant(fm.F), params, f"{prefix}.in_face")
    h_edge = _affine(ag.constant(fm.E), params, f"{prefix}.in_edge")
    h_coedge = _affine(ag.constant(fm.C), params, f"{prefix}.in_coedge")

    for layer in range(n_layers):
        name = f"{prefix}.layer{layer}"
        walk_states = [ag.gather_rows(h_coedge, walk.coedges[:, k]) for k in range(6)]
        walk_states += [
            ag.gather_rows(h_face, walk.faces[:, 0]),
            ag.gather_rows(h_face, walk.faces[:, 1]),
            ag.gather_rows(h_edge, walk.edges),
        ]
        h_coedge = ag.relu(_affine(ag.concat_cols(walk_states), params, f"{name}.coedge"))
        if rng is not None:
            h_coedge = ag.dropout(h_coedge, dropout, rng)
        h_face = ag.relu(_affine(ag.segment_max(h_coedge, walk.coedge_face, n_faces), params, f"{name}.face"))
        if layer < n_layers - 1:
            h_edge = ag.relu(_affine(ag.segment_max(h_coedge, walk.coedge_edge, n_edges), params, f"{name}.edge"))
    return h_face
