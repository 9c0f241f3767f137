"""Step and type heads, step-embedding aggregation and the training losses.

Step labels are arbitrary up to permutation, so the step loss first matches
ground-truth step columns to predicted columns by column RIoU (Hungarian)
and then scores each face row with RIoU under that matching. The matching
and the argmax step memberships used for aggregation are constants with
respect to gradients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from src.errors import DegenerateInput, ShapeError
from src.model.assignment import Assignment, hungarian
from src.nn import autograd as ag
from src.nn.params import ModelParams

AggregationMode = Literal["avg", "max", "sum_softmax", "soft_labels", "none"]
AGGREGATION_MODES: tuple[str, ...] = ("avg", "max", "sum_softmax", "soft_labels", "none")


@dataclass(frozen=True)
class StepPrediction:
    probs: np.ndarray  # (N_f, k_s), row-stochastic
    labels: np.ndarray  # argmax per row, lowest index on ties

    @classmethod
    def from_probs(cls, probs: np.ndarray) -> StepPrediction:
        return cls(probs=probs, labels=np.argmax(probs, axis=1))


@dataclass(frozen=True)
class TypePrediction:
    probs: np.ndarray
    labels: np.ndarray

    @classmethod
    def from_probs(cls, probs: np.ndarray) -> TypePrediction:
        return cls(probs=probs, labels=np.argmax(probs, axis=1))


def one_hot(labels: np.ndarray, width: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= width):
        raise ShapeError(f"labels {labels.min()}..{labels.max()} do not fit {width} columns")
    out = np.zeros((labels.size, width))
    out[np.arange(labels.size), labels] = 1.0
    return out


def _affine(x: ag.Tensor, params: ModelParams, name: str) -> ag.Tensor:
    return ag.affine(x, ag.param(params[f"{name}.W"]), ag.param(params[f"{name}.b"]))


# ---------------------------------------------------------------------------
# Step head and matching
# ---------------------------------------------------------------------------


def step_head(embeddings: ag.Tensor, params: ModelParams, prefix: str = "step_head") -> ag.Tensor:
    """``softmax_rows(affine(face_embeddings))``, a single layer to ``k_s`` columns."""
    return ag.softmax_rows(_affine(embeddings, params, prefix))


def riou(s: np.ndarray, s_hat: np.ndarray) -> float:
    """Relaxed IoU ``s.s_hat / (|s|_1 + |s_hat|_1 - s.s_hat)``.

    Raises:
        DegenerateInput: If the denominator is not positive.
    """
    s = np.asarray(s, dtype=np.float64)
    s_hat = np.asarray(s_hat, dtype=np.float64)
    if s.shape != s_hat.shape:
        raise ShapeError(f"riou: {s.shape} vs {s_hat.shape}")
    inter = float(s @ s_hat)
    denom = float(np.abs(s).sum() + np.abs(s_hat).sum()) - inter
    if denom <= 0.0:
        raise DegenerateInput("riou of two all-zero vectors")
    return inter / denom


def align_steps(S: np.ndarray, S_hat: np.ndarray) -> Assignment:
    """Match the ground-truth step columns present in *S* to columns of *S_hat*.

    ``cost[a][b] = 1 - riou(S[:, a], S_hat[:, b])``; all-zero (padded) GT
    columns are left out of the assignment domain.
    """
    S = np.asarray(S, dtype=np.float64)
    S_hat = np.asarray(S_hat, dtype=np.float64)
    if S.shape[0] != S_hat.shape[0]:
        raise ShapeError(f"align_steps: {S.shape[0]} vs {S_hat.shape[0]} faces")
    present = [a for a in range(S.shape[1]) if S[:, a].any()]
    cost = np.empty((len(present), S_hat.shape[1]))
    for i, a in enumerate(present):
        for b in range(S_hat.shape[1]):
            cost[i, b] = 1.0 - riou(S[:, a], S_hat[:, b])
    matched = hungarian(cost)
    return Assignment(
        rows=tuple(present[i] for i in matched.rows),
        cols=matched.cols,
        total_cost=matched.total_cost,
    )


def aligned_targets(S: np.ndarray, assignment: Assignment, width: int) -> np.ndarray:
    """Move each GT column to its matched predicted column.

    Scoring rows of this matrix against ``S_hat`` equals scoring ``S``
    against ``S_hat`` with its columns permuted by the matching.
    """
    out = np.zeros((S.shape[0], width))
    for a, b in zip(assignment.rows, assignment.cols, strict=True):
        out[:, b] = S[:, a]
    return out


def step_loss(S: np.ndarray, S_hat: ag.Tensor, assignment: Assignment | None = None) -> tuple[ag.Tensor, Assignment]:
    """Mean over faces of ``1 - riou(s_j, s_hat_j)`` after matching.

    Pass *assignment* to hold the matching fixed (finite-difference checks).
    """
    S = np.asarray(S, dtype=np.float64)
    if S.shape[0] != S_hat.shape[0] or S.shape[1] > S_hat.shape[1]:
        raise ShapeError(f"step_loss: targets {S.shape} vs predictions {S_hat.shape}")
    if assignment is None:
        assignment = align_steps(S, S_hat.value)
    targets = aligned_targets(S, assignment, S_hat.shape[1])
    scores = ag.riou_rows(targets, S_hat)
    return ag.shift(ag.scale(ag.mean(scores), -1.0), 1.0), assignment


# ---------------------------------------------------------------------------
# Aggregation and type head
# ---------------------------------------------------------------------------


def step_membership(step_probs: np.ndarray) -> tuple[np.ndarray, int]:
    """Compact segment id per face for the realized argmax steps, and the segment count."""
    labels = np.argmax(step_probs, axis=1)
    _, inverse = np.unique(labels, return_inverse=True)
    inverse = inverse.reshape(-1)
    return inverse, int(inverse.max()) + 1 if inverse.size else 0


def aggregate_step_embeddings(
    embeddings: ag.Tensor,
    step_probs: ag.Tensor,
    mode: AggregationMode,
    membership: tuple[np.ndarray, int] | None = None,
) -> ag.Tensor | None:
    """Per-face aggregated step embedding; ``None`` when *mode* is ``none``.

    ``soft_labels`` returns the step probabilities themselves.
    """
    if mode == "none":
        return None
    if mode == "soft_labels":
        return step_probs
    if embeddings.shape[0] != step_probs.shape[0]:
        raise ShapeError(f"aggregate: {embeddings.shape[0]} embeddings vs {step_probs.shape[0]} step rows")
    segment, n_segments = membership if membership is not None else step_membership(step_probs.value)
    if mode == "avg":
        pooled = ag.segment_mean(embeddings, segment, n_segments)
    elif mode == "max":
        pooled = ag.segment_max(embeddings, segment, n_segments)
    elif mode == "sum_softmax":
        pooled = ag.softmax_rows(ag.segment_sum(embeddings, segment, n_segments))
    else:
        raise ShapeError(f"unknown aggregation mode {mode!r}")
    return ag.gather_rows(pooled, segment)


def type_input_width(d_emb: int, k_s: int, mode: AggregationMode) -> int:
    if mode == "none":
        return d_emb
    if mode == "soft_labels":
        return d_emb + k_s
    return 2 * d_emb


def type_head(
    embeddings: ag.Tensor,
    step_embeddings: ag.Tensor | None,
    params: ModelParams,
    prefix: str = "type_head",
) -> ag.Tensor:
    """``softmax_rows(affine(face_embeddings ++ step_embeddings))``; face embeddings alone without aggregation."""
    x = embeddings if step_embeddings is None else ag.concat_cols([embeddings, step_embeddings])
    return ag.softmax_rows(_affine(x, params, prefix))


def type_loss(T: np.ndarray, T_hat: ag.Tensor) -> ag.Tensor:
    return ag.mean(ag.cross_entropy_rows(T_hat, np.asarray(T, dtype=np.float64)))


def total_loss(l_step: ag.Tensor, l_type: ag.Tensor, weights: tuple[float, float] = (1.0, 1.0)) -> ag.Tensor:
    w_step, w_type = weights
    if w_step == 1.0 and w_type == 1.0:
        return ag.add(l_step, l_type)
    return ag.add(ag.scale(l_step, w_step), ag.scale(l_type, w_type))
