"""SVG rendering of recovered sketches."""

from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np

from src.errors import EmptySketch
from src.sketch.recovery import Sketch

SVG_NS = "http://www.w3.org/2000/svg"
MARGIN = 0.05
JOIN_TOL = 1e-9


def _num(x: float) -> str:
    return format(float(x) + 0.0, ".10g")


def segment_chains(segments: np.ndarray) -> list[list[np.ndarray]]:
    """Split consecutive segments into polylines wherever an end does not meet the next start."""
    chains: list[list[np.ndarray]] = []
    for p, q in segments:
        if chains and float(np.linalg.norm(chains[-1][-1] - p)) <= JOIN_TOL:
            chains[-1].append(q)
        else:
            chains.append([p, q])
    return chains


def export_svg(sketch: Sketch) -> str:
    """Render *sketch* as an SVG document.

    The view box is square, centred on the segments' bounds and padded by
    5% of the half-extent. The sketch ``v`` axis points up.

    Raises:
        EmptySketch: The sketch has no segments or zero extent.
    """
    if sketch.status == "degenerate" or len(sketch.segments) == 0:
        raise EmptySketch(f"step {sketch.step_id} has no segments to draw")
    flipped = sketch.segments * np.array([1.0, -1.0])
    pts = flipped.reshape(-1, 2)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    half = float(np.max(hi - lo)) / 2.0
    if half <= 0.0:
        raise EmptySketch(f"step {sketch.step_id} has zero extent")
    center = (lo + hi) / 2.0
    half *= 1.0 + MARGIN
    view = (center[0] - half, center[1] - half, 2 * half, 2 * half)

    root = ET.Element(
        "svg",
        {
            "xmlns": SVG_NS,
            "viewBox": " ".join(_num(x) for x in view),
            "width": "512",
            "height": "512",
            "preserveAspectRatio": "xMidYMid meet",
        },
    )
    group = ET.SubElement(
        root,
        "g",
        {
            "id": f"step-{sketch.step_id}",
            "fill": "none",
            "stroke": "black",
            "stroke-width": "1",
            "vector-effect": "non-scaling-stroke",
        },
    )
    for chain in segment_chains(flipped):
        d = "M " + " L ".join(f"{_num(p[0])} {_num(p[1])}" for p in chain)
        ET.SubElement(group, "path", {"d": d, "vector-effect": "non-scaling-stroke"})
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"
