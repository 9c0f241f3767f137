from __future__ import annotations

import logging
from dataclasses import replace

import numpy as np

from src.brep.geometry import compute_bbox, transform_curve, transform_surface
from src.brep.model import BRep
from src.errors import DegenerateModel

logger = logging.getLogger(__name__)


def normalize_model(b: BRep) -> tuple[BRep, float, np.ndarray]:
    """Center the bounding box at the origin and scale its largest extent to 2.

    Returns ``(normalized, scale, center)`` where model coordinates map to
    ``(p - center) / scale``. Topology and labels are untouched; the returned
    model keeps the original bounding box as ``scale_info``.

    Raises:
        DegenerateModel: If every bounding-box extent is zero.
    """
    bbox = compute_bbox(b)
    extent = max(bbox.extent)
    if not extent > 0.0:
        raise DegenerateModel(f"model {b.name!r} has a zero-extent bounding box")
    center = np.asarray(bbox.center, dtype=np.float64)
    scale = 0.5 * extent

    faces = tuple(replace(f, surface=transform_surface(f.surface, center, scale)) for f in b.faces)
    edges = tuple(replace(e, curve=transform_curve(e.curve, center, scale)) for e in b.edges)
    logger.debug("Normalized %s: scale=%.6g center=%s", b.name, scale, center.tolist())
    return replace(b, faces=faces, edges=edges, scale_info=bbox), scale, center
