from src.synth.dataset import Manifest, ManifestEntry, generate_dataset, load_manifest, read_split, split_sizes
from src.synth.generator import (
    GEN_VOCABULARY,
    GeneratedModel,
    GenParams,
    SolidBuilder,
    StepRecord,
    generate_model,
    generate_with_records,
)
from src.synth.rng import SplitMix64, derive_seed

__all__ = [
    "GEN_VOCABULARY",
    "GenParams",
    "GeneratedModel",
    "Manifest",
    "ManifestEntry",
    "SolidBuilder",
    "SplitMix64",
    "StepRecord",
    "derive_seed",
    "generate_dataset",
    "generate_model",
    "generate_with_records",
    "load_manifest",
    "read_split",
    "split_sizes",
]
