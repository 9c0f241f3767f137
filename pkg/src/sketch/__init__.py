from src.sketch.recovery import (
    Sketch,
    extrusion_axis,
    group_extrude_sides,
    hausdorff_deviation,
    plane_basis,
    projection_origin,
    recover_sketches,
    sketch_deviation,
)
from src.sketch.svg import export_svg

__all__ = [
    "Sketch",
    "export_svg",
    "extrusion_axis",
    "group_extrude_sides",
    "hausdorff_deviation",
    "plane_basis",
    "projection_origin",
    "recover_sketches",
    "sketch_deviation",
]
