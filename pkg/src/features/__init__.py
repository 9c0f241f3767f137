from src.features.extract import (
    COEDGE_DIM,
    EDGE_DIM,
    FeatureMatrices,
    UVGrid,
    build_feature_matrices,
    coedge_feature_row,
    dump_features,
    edge_feature_row,
    extract_features,
    face_dim,
    face_feature_row,
    sample_uv_grid,
)
from src.features.normalize import normalize_model

__all__ = [
    "COEDGE_DIM",
    "EDGE_DIM",
    "FeatureMatrices",
    "UVGrid",
    "build_feature_matrices",
    "coedge_feature_row",
    "dump_features",
    "edge_feature_row",
    "extract_features",
    "face_dim",
    "face_feature_row",
    "normalize_model",
    "sample_uv_grid",
]
