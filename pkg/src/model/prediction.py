"""Per-model prediction records and their JSON files."""

from __future__ import annotations

import json
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from src.brep.model import BRep
from src.brep.topology import canonical_step_labels, type_labels
from src.errors import IoError, SchemaError, UnknownLabel, VersionError

PREDICTION_VERSION = "1"
PREDICTION_SUFFIX = ".pred.json"


@dataclass(frozen=True)
class Prediction:
    """Per-face argmax labels plus probabilities for one model."""

    model: str
    vocabulary: tuple[str, ...]
    op_type: np.ndarray
    op_step: np.ndarray
    type_probs: np.ndarray | None = None
    step_probs: np.ndarray | None = None

    @property
    def n_faces(self) -> int:
        return int(self.op_type.size)


def prediction_from_labels(b: BRep) -> Prediction:
    """Ground-truth labels of *b* in prediction form."""
    return Prediction(
        model=b.name,
        vocabulary=tuple(b.vocabulary),
        op_type=type_labels(b),
        op_step=canonical_step_labels(b),
    )


def prediction_to_document(pred: Prediction, provenance: Mapping[str, Any] | None = None) -> dict[str, Any]:
    faces = []
    for j in range(pred.n_faces):
        row: dict[str, Any] = {
            "id": j,
            "op_type": pred.vocabulary[int(pred.op_type[j])],
            "op_step": int(pred.op_step[j]),
        }
        if pred.type_probs is not None:
            row["type_probs"] = [float(x) for x in pred.type_probs[j]]
        if pred.step_probs is not None:
            row["step_probs"] = [float(x) for x in pred.step_probs[j]]
        faces.append(row)
    return {
        "format_version": PREDICTION_VERSION,
        "model": pred.model,
        "vocabulary": list(pred.vocabulary),
        "faces": faces,
        "provenance": dict(provenance or {}),
    }


def write_prediction(pred: Prediction, path: str | Path, provenance: Mapping[str, Any] | None = None) -> None:
    try:
        Path(path).write_text(json.dumps(prediction_to_document(pred, provenance), indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_prediction(path: str | Path) -> Prediction:
    """Raises ``IoError``, ``VersionError``, ``SchemaError`` or ``UnknownLabel``."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc.msg})") from exc
    if not isinstance(doc, dict) or doc.get("format_version") != PREDICTION_VERSION:
        raise VersionError(f"{path}: unsupported prediction version")
    try:
        vocabulary = tuple(doc["vocabulary"])
        faces = sorted(doc["faces"], key=lambda f: f["id"])
        if [f["id"] for f in faces] != list(range(len(faces))):
            raise SchemaError(f"{path}: face ids are not 0..{len(faces) - 1}")
        types: list[int] = []
        for f in faces:
            if f["op_type"] not in vocabulary:
                raise UnknownLabel(f"{path}: face {f['id']} has type {f['op_type']!r} outside the vocabulary")
            types.append(vocabulary.index(f["op_type"]))
        type_probs = np.array([f["type_probs"] for f in faces]) if all("type_probs" in f for f in faces) else None
        step_probs = np.array([f["step_probs"] for f in faces]) if all("step_probs" in f for f in faces) else None
        return Prediction(
            model=str(doc["model"]),
            vocabulary=vocabulary,
            op_type=np.array(types, dtype=np.int64),
            op_step=np.array([int(f["op_step"]) for f in faces], dtype=np.int64),
            type_probs=type_probs if faces else None,
            step_probs=step_probs if faces else None,
        )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"{path}: malformed prediction ({exc})") from exc
