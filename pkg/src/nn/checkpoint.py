"""Versioned JSON checkpoints.

Layout::

    {"format_version": "1", "arch_config": {...}, "provenance": {...},
     "params": [{"name": ..., "shape": [...], "data": [f64, ...]}, ...]}

Floats are written with ``repr`` precision so a reload is bitwise exact.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import numpy as np

from src.errors import IoError, ShapeError, VersionError
from src.nn.params import ModelParams

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = "1"


def save_params(
    path: str | Path,
    params: ModelParams,
    arch_config: Mapping[str, Any],
    provenance: Mapping[str, Any] | None = None,
) -> None:
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "arch_config": dict(arch_config),
        "provenance": dict(provenance or {}),
        "params": [
            {"name": p.name, "shape": list(p.shape), "data": [float(x) for x in p.value.ravel()]} for p in params
        ],
    }
    try:
        Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write checkpoint {path}: {exc}") from exc
    logger.debug("Saved %d parameter arrays to %s", len(params), path)


def load_params(
    path: str | Path,
    expected_shapes: Mapping[str, tuple[int, ...]] | None = None,
) -> tuple[ModelParams, dict[str, Any]]:
    """Read a checkpoint; returns ``(params, arch_config)``.

    Raises:
        IoError: Unreadable file.
        VersionError: Corrupted document or unknown ``format_version``.
        ShapeError: Data length disagrees with a declared shape, or the
            parameters do not match *expected_shapes*.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read checkpoint {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise VersionError(f"{path}: corrupted checkpoint ({exc.msg})") from exc
    if not isinstance(doc, dict) or doc.get("format_version") != CHECKPOINT_VERSION:
        found = doc.get("format_version") if isinstance(doc, dict) else None
        raise VersionError(f"{path}: unsupported checkpoint version {found!r}")

    params = ModelParams()
    for entry in doc.get("params", []):
        shape = tuple(int(s) for s in entry["shape"])
        data = np.asarray(entry["data"], dtype=np.float64)
        if data.size != math.prod(shape):
            raise ShapeError(f"{entry['name']}: {data.size} values for shape {shape}")
        params.add(entry["name"], data.reshape(shape))

    if expected_shapes is not None:
        found_shapes = params.shapes()
        if found_shapes != dict(expected_shapes):
            diff = sorted(
                name
                for name in set(found_shapes) | set(expected_shapes)
                if found_shapes.get(name) != expected_shapes.get(name)
            )
            raise ShapeError(f"{path}: parameters do not match the architecture: {diff}")
    return params, dict(doc.get("arch_config", {}))
