from src.brep.io import parse_brep, read_brep, serialize_brep, write_brep
from src.brep.model import VOCABULARIES, BRep, Coedge, CurveGeom, Edge, Face, FaceLabels, SurfaceGeom, TypeVocabulary
from src.brep.topology import WalkSet, kernel_neighborhood
from src.brep.validation import ValidationReport, Violation, validate_topology

__all__ = [
    "VOCABULARIES",
    "BRep",
    "Coedge",
    "CurveGeom",
    "Edge",
    "Face",
    "FaceLabels",
    "SurfaceGeom",
    "TypeVocabulary",
    "ValidationReport",
    "Violation",
    "WalkSet",
    "kernel_neighborhood",
    "parse_brep",
    "read_brep",
    "serialize_brep",
    "validate_topology",
    "write_brep",
]
