"""Dataset generation: model files plus a ``manifest.json`` with splits."""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Mapping
from pathlib import Path
from typing import Any, Literal

from opentelemetry import trace
from pydantic import BaseModel, ConfigDict, ValidationError

from src.brep.io import read_brep, write_brep
from src.brep.model import BRep
from src.brep.schema import FILE_SUFFIX
from src.errors import IoError, SchemaError, VersionError
from src.provenance import provenance_block
from src.synth.generator import GenParams, generate_with_records
from src.synth.rng import derive_seed

logger = logging.getLogger(__name__)
tracer = trace.get_tracer(__name__)

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = "1"

Split = Literal["train", "val", "test"]
SPLIT_RATIOS: tuple[tuple[Split, float], ...] = (("train", 0.65), ("val", 0.15), ("test", 0.20))


class ManifestEntry(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    file: str
    k: int
    split: Split


class Manifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format_version: str = MANIFEST_VERSION
    params: GenParams
    models: list[ManifestEntry]
    provenance: dict[str, Any] = {}

    def files(self, split: Split | None = None) -> list[str]:
        return [m.file for m in self.models if split is None or m.split == split]


def split_sizes(n: int, ratios: tuple[tuple[Split, float], ...] = SPLIT_RATIOS) -> dict[Split, int]:
    """Largest-remainder apportionment of *n* models; ties go to the earlier split."""
    quotas = [(name, n * share) for name, share in ratios]
    sizes = {name: math.floor(q) for name, q in quotas}
    leftover = n - sum(sizes.values())
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i][1] - math.floor(quotas[i][1])), i))
    for i in order[:leftover]:
        sizes[quotas[i][0]] += 1
    return sizes


def _assign_splits(n: int) -> list[Split]:
    out: list[Split] = []
    for name, size in split_sizes(n).items():
        out.extend([name] * size)
    return out


def model_file_name(index: int) -> str:
    return f"model_{index:05d}{FILE_SUFFIX}"


def _write_json(path: Path, payload: Mapping[str, Any]) -> None:
    try:
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def generate_dataset(params: GenParams, out_dir: str | Path) -> Manifest:
    """Write ``params.n_models`` generated models and ``manifest.json`` into *out_dir*.

    Model ``i`` is generated from ``derive_seed(params.seed, i)``; splits are
    contiguous (train first) with 65/15/20 sizes.

    Raises:
        IoError: If *out_dir* cannot be created or written.
        GenerationRetryExceeded: Propagated from the generator.
    """
    root = Path(out_dir)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {root}: {exc}") from exc

    splits = _assign_splits(params.n_models)
    entries: list[ManifestEntry] = []
    with tracer.start_as_current_span("generate_dataset") as span:
        span.set_attribute("cadops.n_models", params.n_models)
        for index in range(params.n_models):
            file_name = model_file_name(index)
            generated = generate_with_records(derive_seed(params.seed, index), params, name=file_name[: -len(FILE_SUFFIX)])
            write_brep(generated.brep, root / file_name)
            entries.append(ManifestEntry(file=file_name, k=generated.k, split=splits[index]))

    manifest = Manifest(
        params=params,
        models=entries,
        provenance=provenance_block(params.model_dump(mode="json")),
    )
    _write_json(root / MANIFEST_NAME, manifest.model_dump(mode="json"))
    logger.info(
        "Generated dataset",
        extra={"n_models": params.n_models, "out_dir": str(root), **split_sizes(params.n_models)},
    )
    return manifest


def manifest_path(path: str | Path) -> Path:
    """Accept either a dataset directory or the manifest file itself."""
    p = Path(path)
    return p / MANIFEST_NAME if p.is_dir() else p


def load_manifest(path: str | Path) -> Manifest:
    """Read a manifest.

    Raises:
        IoError: Unreadable file.
        VersionError: Unknown ``format_version``.
        SchemaError: Structurally invalid manifest.
    """
    mpath = manifest_path(path)
    try:
        raw = json.loads(mpath.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read {mpath}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{mpath}: not valid JSON ({exc.msg})") from exc
    if not isinstance(raw, dict) or raw.get("format_version") != MANIFEST_VERSION:
        version = raw.get("format_version") if isinstance(raw, dict) else None
        raise VersionError(f"{mpath}: unsupported manifest version {version!r}")
    try:
        return Manifest.model_validate(raw)
    except ValidationError as exc:
        raise SchemaError(f"{mpath}: {exc.errors()[0]['msg']}") from exc


def read_split(path: str | Path, split: Split | None = None) -> list[BRep]:
    """Load the models of one split (or all), in manifest order."""
    mpath = manifest_path(path)
    manifest = load_manifest(mpath)
    return [read_brep(mpath.parent / name) for name in manifest.files(split)]
