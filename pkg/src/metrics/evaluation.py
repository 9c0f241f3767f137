"""Segmentation metrics: op.type accuracy / IoU, op.step accuracy and step consistency.

Every metric is a fraction in [0, 1]; written reports render percentages
with one decimal.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np
from opentelemetry import trace
from pydantic import BaseModel

from src.brep.model import BRep, TypeVocabulary
from src.config.settings import get_settings
from src.errors import ConfigError, IoError, ShapeError, UnknownLabel, VocabularyMismatch
from src.model.heads import align_steps, one_hot
from src.model.network import SegmentationNet
from src.model.prediction import PREDICTION_SUFFIX, Prediction, prediction_from_labels, read_prediction
from src.synth.dataset import Split, read_split

logger = logging.getLogger(__name__)
tracer = trace.get_tracer(__name__)


# ---------------------------------------------------------------------------
# Report types
# ---------------------------------------------------------------------------


class ModelRow(BaseModel):
    model: str
    n_faces: int
    k: int
    type_acc: float
    step_acc: float
    s_c: float
    consistent_steps: int
    predicted_steps: int


class StepBreakdownRow(BaseModel):
    k: int
    n_models: int
    step_macc: float
    type_macc: float


class EvalReport(BaseModel):
    type_macc: float
    type_miou: float
    face_acc_pooled: float
    per_class_iou: dict[str, float | None]
    step_macc: float
    r_c: float
    ms_c: float
    n_models: int
    n_faces: int
    models: list[ModelRow]
    steps_breakdown: list[StepBreakdownRow]


class TypeMetrics(BaseModel):
    macc: float
    miou: float
    face_acc_pooled: float
    per_class_iou: dict[str, float | None]


# ---------------------------------------------------------------------------
# Label helpers
# ---------------------------------------------------------------------------


def group_types(labels: Sequence[int | str] | np.ndarray, vocabulary: TypeVocabulary) -> list[str]:
    """Map sub-types to their grouped super-type (``extrude_side`` -> ``extrude``).

    Raises:
        UnknownLabel: For an index or name outside the vocabulary.
    """
    out: list[str] = []
    for label in labels:
        if isinstance(label, str):
            if label not in vocabulary.grouping:
                raise UnknownLabel(f"type {label!r} is not in the vocabulary")
            out.append(vocabulary.grouping[label])
            continue
        index = int(label)
        if not 0 <= index < vocabulary.k_t:
            raise UnknownLabel(f"type index {index} outside [0, {vocabulary.k_t})")
        out.append(vocabulary.grouping[vocabulary.names[index]])
    return out


def _check_pair(pred: Prediction, gt: Prediction) -> None:
    if tuple(pred.vocabulary) != tuple(gt.vocabulary):
        raise VocabularyMismatch(f"{pred.model}: prediction vocabulary differs from ground truth")
    if pred.n_faces != gt.n_faces:
        raise ShapeError(f"{pred.model}: {pred.n_faces} predicted faces vs {gt.n_faces} ground-truth faces")


def _dense(labels: np.ndarray) -> np.ndarray:
    _, inverse = np.unique(labels, return_inverse=True)
    return inverse.reshape(-1)


# ---------------------------------------------------------------------------
# op.type
# ---------------------------------------------------------------------------


def type_metrics(preds: Sequence[Prediction], gts: Sequence[Prediction]) -> TypeMetrics:
    """mAcc over models, pooled per-class IoU, and mIoU over classes that occur.

    Raises:
        VocabularyMismatch: Prediction and ground-truth vocabularies differ.
    """
    if len(preds) != len(gts):
        raise ShapeError(f"{len(preds)} predictions for {len(gts)} models")
    if not preds:
        raise ShapeError("no models to score")
    vocabulary = tuple(gts[0].vocabulary)
    k_t = len(vocabulary)
    tp, fp, fn = np.zeros(k_t), np.zeros(k_t), np.zeros(k_t)
    accuracies: list[float] = []
    correct_total = faces_total = 0
    for pred, gt in zip(preds, gts, strict=True):
        _check_pair(pred, gt)
        if tuple(gt.vocabulary) != vocabulary:
            raise VocabularyMismatch(f"{gt.model}: vocabulary differs from the rest of the dataset")
        hit = pred.op_type == gt.op_type
        accuracies.append(float(hit.mean()))
        correct_total += int(hit.sum())
        faces_total += gt.n_faces
        for c in range(k_t):
            is_pred, is_gt = pred.op_type == c, gt.op_type == c
            tp[c] += np.sum(is_pred & is_gt)
            fp[c] += np.sum(is_pred & ~is_gt)
            fn[c] += np.sum(~is_pred & is_gt)

    per_class: dict[str, float | None] = {}
    for c, name in enumerate(vocabulary):
        denom = tp[c] + fp[c] + fn[c]
        per_class[name] = float(tp[c] / denom) if denom > 0 else None
    present = [v for v in per_class.values() if v is not None]
    return TypeMetrics(
        macc=float(np.mean(accuracies)),
        miou=float(np.mean(present)) if present else 0.0,
        face_acc_pooled=correct_total / faces_total if faces_total else 0.0,
        per_class_iou=per_class,
    )


# ---------------------------------------------------------------------------
# op.step
# ---------------------------------------------------------------------------


def model_step_accuracy(pred: Prediction, gt: Prediction) -> float:
    """Face accuracy after matching predicted steps to ground-truth steps."""
    _check_pair(pred, gt)
    if gt.n_faces == 0:
        return 1.0
    gt_steps = _dense(gt.op_step)
    k_gt = int(gt_steps.max()) + 1
    width = max(int(pred.op_step.max()) + 1, k_gt)
    assignment = align_steps(one_hot(gt_steps, k_gt), one_hot(pred.op_step, width))
    mapping = assignment.mapping
    matched = np.array([mapping[int(s)] for s in gt_steps])
    return float(np.mean(pred.op_step == matched))


def step_macc(preds: Sequence[Prediction], gts: Sequence[Prediction]) -> float:
    if not preds:
        raise ShapeError("no models to score")
    return float(np.mean([model_step_accuracy(p, g) for p, g in zip(preds, gts, strict=True)]))


# ---------------------------------------------------------------------------
# Consistency
# ---------------------------------------------------------------------------


def _step_groups(pred: Prediction) -> list[list[str]]:
    grouped = group_types(pred.op_type, TypeVocabulary.from_names(pred.vocabulary))
    steps: dict[int, list[str]] = {}
    for step, label in zip(pred.op_step.tolist(), grouped, strict=True):
        steps.setdefault(int(step), []).append(label)
    return [steps[s] for s in sorted(steps)]


def step_consistency_counts(pred: Prediction) -> tuple[int, int]:
    """``(consistent, total)`` predicted steps of one model."""
    groups = _step_groups(pred)
    return sum(1 for g in groups if len(set(g)) == 1), len(groups)


def consistency_ratio(preds: Sequence[Prediction]) -> float:
    """R_C: consistent predicted steps over predicted steps, pooled across models."""
    consistent = total = 0
    for pred in preds:
        c, t = step_consistency_counts(pred)
        consistent += c
        total += t
    return consistent / total if total else 1.0


def consistency_score(pred: Prediction) -> float:
    """S_C: mean over predicted steps of the majority grouped-type fraction."""
    groups = _step_groups(pred)
    if not groups:
        return 1.0
    fractions = [max(g.count(t) for t in set(g)) / len(g) for g in groups]
    return float(np.mean(fractions))


# ---------------------------------------------------------------------------
# Dataset evaluation
# ---------------------------------------------------------------------------


def evaluate(preds: Sequence[Prediction], gts: Sequence[Prediction]) -> EvalReport:
    types = type_metrics(preds, gts)
    rows: list[ModelRow] = []
    for pred, gt in zip(preds, gts, strict=True):
        consistent, predicted = step_consistency_counts(pred)
        rows.append(
            ModelRow(
                model=gt.model,
                n_faces=gt.n_faces,
                k=int(np.unique(gt.op_step).size),
                type_acc=float(np.mean(pred.op_type == gt.op_type)),
                step_acc=model_step_accuracy(pred, gt),
                s_c=consistency_score(pred),
                consistent_steps=consistent,
                predicted_steps=predicted,
            )
        )

    breakdown: list[StepBreakdownRow] = []
    for k in sorted({r.k for r in rows}):
        group = [r for r in rows if r.k == k]
        breakdown.append(
            StepBreakdownRow(
                k=k,
                n_models=len(group),
                step_macc=float(np.mean([r.step_acc for r in group])),
                type_macc=float(np.mean([r.type_acc for r in group])),
            )
        )

    total_steps = sum(r.predicted_steps for r in rows)
    return EvalReport(
        type_macc=types.macc,
        type_miou=types.miou,
        face_acc_pooled=types.face_acc_pooled,
        per_class_iou=types.per_class_iou,
        step_macc=float(np.mean([r.step_acc for r in rows])),
        r_c=sum(r.consistent_steps for r in rows) / total_steps if total_steps else 1.0,
        ms_c=float(np.mean([r.s_c for r in rows])),
        n_models=len(rows),
        n_faces=sum(r.n_faces for r in rows),
        models=rows,
        steps_breakdown=breakdown,
    )


def _load_predictions(models: Sequence[BRep], predictions_dir: Path) -> list[Prediction]:
    preds: list[Prediction] = []
    for b in models:
        path = predictions_dir / f"{b.name}{PREDICTION_SUFFIX}"
        if not path.exists():
            raise IoError(f"missing prediction file {path}")
        preds.append(read_prediction(path))
    return preds


def evaluate_dataset(
    manifest: str | Path,
    *,
    checkpoint: str | Path | None = None,
    predictions_dir: str | Path | None = None,
    split: Split = "test",
    threads: int | None = None,
) -> EvalReport:
    """Score one split of a dataset with a checkpoint or a directory of prediction files.

    Raises:
        ConfigError: Neither or both sources given, or the split is empty.
        IoError: Missing or unreadable inputs.
    """
    if (checkpoint is None) == (predictions_dir is None):
        raise ConfigError("evaluate with exactly one of a checkpoint or a predictions directory")
    with tracer.start_as_current_span("evaluate") as span:
        models = read_split(manifest, split)
        if not models:
            raise ConfigError(f"split {split!r} has no models")
        span.set_attribute("cadops.n_models", len(models))
        gts = [prediction_from_labels(b) for b in models]
        if checkpoint is not None:
            net = SegmentationNet.load(checkpoint)
            with ThreadPoolExecutor(max_workers=get_settings().resolve_threads(threads)) as pool:
                preds = list(pool.map(net.predict, models))
        else:
            preds = _load_predictions(models, Path(predictions_dir))  # type: ignore[arg-type]
        report = evaluate(preds, gts)
    logger.info(
        "Evaluation complete",
        extra={"split": split, "n_models": report.n_models, "type_macc": report.type_macc, "step_macc": report.step_macc},
    )
    return report


# ---------------------------------------------------------------------------
# Report files
# ---------------------------------------------------------------------------


def _pct(x: float | None) -> float | None:
    return None if x is None else round(100.0 * x, 1)


def report_document(report: EvalReport, provenance: Mapping[str, Any] | None = None) -> dict[str, Any]:
    """JSON view with every metric as a percentage."""
    return {
        "metrics": {
            "type_macc": _pct(report.type_macc),
            "type_miou": _pct(report.type_miou),
            "face_acc_pooled": _pct(report.face_acc_pooled),
            "step_macc": _pct(report.step_macc),
            "r_c": _pct(report.r_c),
            "ms_c": _pct(report.ms_c),
        },
        "per_class_iou": {name: _pct(v) for name, v in report.per_class_iou.items()},
        "counts": {"n_models": report.n_models, "n_faces": report.n_faces},
        "models": [
            {
                "model": r.model,
                "n_faces": r.n_faces,
                "k": r.k,
                "type_acc": _pct(r.type_acc),
                "step_acc": _pct(r.step_acc),
                "s_c": _pct(r.s_c),
            }
            for r in report.models
        ],
        "provenance": dict(provenance or {}),
    }


def _csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def write_report(report: EvalReport, out_dir: str | Path, provenance: Mapping[str, Any] | None = None) -> None:
    """Write ``report.json``, ``report.csv`` (per model) and ``steps_breakdown.csv``."""
    root = Path(out_dir)
    per_model = _csv(
        ("model", "n_faces", "k", "type_acc", "step_acc", "s_c"),
        [(r.model, r.n_faces, r.k, _pct(r.type_acc), _pct(r.step_acc), _pct(r.s_c)) for r in report.models],
    )
    breakdown = _csv(
        ("k", "n_models", "step_macc", "type_macc"),
        [(r.k, r.n_models, _pct(r.step_macc), _pct(r.type_macc)) for r in report.steps_breakdown],
    )
    try:
        root.mkdir(parents=True, exist_ok=True)
        (root / "report.json").write_text(json.dumps(report_document(report, provenance), indent=2) + "\n", encoding="utf-8")
        (root / "report.csv").write_text(per_model, encoding="utf-8")
        (root / "steps_breakdown.csv").write_text(breakdown, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write report to {root}: {exc}") from exc
