"""Provenance block embedded in every artifact the tool writes."""

from __future__ import annotations

import hashlib
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Any

TOOL_VERSION = "0.1.0"


def hash_bytes(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def hash_file(path: str | Path) -> str:
    return hash_bytes(Path(path).read_bytes())


def provenance_block(
    config: Mapping[str, Any] | None,
    inputs: Mapping[str, str] | Iterable[tuple[str, str]] = (),
) -> dict[str, Any]:
    """Return ``{tool_version, resolved_config, input_hashes}``.

    *inputs* maps a stable input label (usually a file name) to its hash;
    labels are sorted so the block is independent of discovery order.
    """
    pairs = dict(inputs.items() if isinstance(inputs, Mapping) else inputs)
    return {
        "tool_version": TOOL_VERSION,
        "resolved_config": dict(config) if config is not None else {},
        "input_hashes": {key: pairs[key] for key in sorted(pairs)},
    }
