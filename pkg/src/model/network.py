"""Joint op.type / op.step segmentation network.

With ``joint=True`` one backbone feeds both heads and the type head also
sees the aggregated step embedding. With ``joint=False`` each head has its
own backbone and no information flows between them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.brep.model import BRep
from src.brep.topology import WalkIndex, build_walk_index, canonical_step_labels, type_labels
from src.config.run_config import Aggregation, RunConfig
from src.errors import ShapeError, VersionError
from src.features.extract import COEDGE_DIM, EDGE_DIM, FeatureMatrices, extract_features, face_dim
from src.model.assignment import Assignment
from src.model.backbone import add_backbone_params, backbone_forward
from src.model.heads import (
    StepPrediction,
    TypePrediction,
    aggregate_step_embeddings,
    one_hot,
    step_head,
    step_loss,
    step_membership,
    total_loss,
    type_head,
    type_input_width,
    type_loss,
)
from src.model.prediction import Prediction
from src.nn import autograd as ag
from src.nn.checkpoint import load_params, save_params
from src.nn.params import ModelParams

logger = logging.getLogger(__name__)


class ArchConfig(BaseModel):
    """Everything needed to rebuild parameter shapes; stored in checkpoints."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    d_emb: int = Field(default=64, gt=0)
    n_layers: int = Field(default=2, gt=0)
    hidden: int = Field(default=64, gt=0)
    grid_resolution: int = Field(default=5, ge=2)
    k_t: int = Field(gt=0)
    k_s: int = Field(gt=0)
    aggregation: Aggregation = "avg"
    joint: bool = True
    dropout: float = 0.0
    vocabulary: tuple[str, ...]

    @model_validator(mode="after")
    def _independent_has_no_aggregation(self) -> ArchConfig:
        if not self.joint and self.aggregation != "none":
            raise ValueError("independent heads cannot aggregate step embeddings")
        if len(self.vocabulary) != self.k_t:
            raise ValueError(f"vocabulary has {len(self.vocabulary)} names but k_t={self.k_t}")
        return self

    @property
    def input_dims(self) -> tuple[int, int, int]:
        return face_dim(self.grid_resolution), EDGE_DIM, COEDGE_DIM

    @classmethod
    def from_run_config(cls, config: RunConfig, k_s: int, vocabulary: tuple[str, ...]) -> ArchConfig:
        return cls(
            d_emb=config.d_emb,
            n_layers=config.n_layers,
            hidden=config.hidden,
            grid_resolution=config.grid_resolution,
            k_t=len(vocabulary),
            k_s=k_s,
            aggregation=config.aggregation,
            joint=config.joint,
            dropout=config.dropout,
            vocabulary=vocabulary,
        )


@dataclass(frozen=True)
class ModelInputs:
    """A model prepared once for repeated forward passes."""

    name: str
    n_faces: int
    features: FeatureMatrices
    walk: WalkIndex
    step_targets: np.ndarray | None  # canonical step id per face
    type_targets: np.ndarray | None

    @property
    def n_steps(self) -> int:
        return 0 if self.step_targets is None else int(self.step_targets.max()) + 1


def prepare_inputs(b: BRep, grid_resolution: int) -> ModelInputs:
    normalized, fm = extract_features(b, grid_resolution)
    labeled = b.is_labeled()
    return ModelInputs(
        name=b.name,
        n_faces=b.n_faces,
        features=fm,
        walk=build_walk_index(normalized),
        step_targets=canonical_step_labels(b) if labeled else None,
        type_targets=type_labels(b) if labeled else None,
    )


@dataclass(frozen=True)
class ForwardResult:
    step_probs: ag.Tensor
    type_probs: ag.Tensor
    membership: tuple[np.ndarray, int]


@dataclass(frozen=True)
class LossTerms:
    step: ag.Tensor
    type: ag.Tensor
    total: ag.Tensor
    assignment: Assignment
    membership: tuple[np.ndarray, int]

    def values(self) -> tuple[float, float, float]:
        return float(self.step.value), float(self.type.value), float(self.total.value)


def _backbone_prefixes(arch: ArchConfig) -> tuple[str, str]:
    return ("backbone", "backbone") if arch.joint else ("backbone_step", "backbone_type")


def init_params(arch: ArchConfig, seed: int) -> ModelParams:
    """Glorot-initialized parameters in a fixed creation order."""
    rng = np.random.default_rng(seed)
    params = ModelParams()
    for prefix in dict.fromkeys(_backbone_prefixes(arch)):
        add_backbone_params(params, prefix, arch.input_dims, arch.hidden, arch.d_emb, arch.n_layers, rng)
    params.add_affine("step_head", arch.d_emb, arch.k_s, rng)
    params.add_affine("type_head", type_input_width(arch.d_emb, arch.k_s, arch.aggregation), arch.k_t, rng)
    return params


class SegmentationNet:
    def __init__(self, arch: ArchConfig, params: ModelParams) -> None:
        expected = init_params(arch, 0).shapes()
        if params.shapes() != expected:
            raise ShapeError("parameters do not match the architecture")
        self.arch = arch
        self.params = params

    @classmethod
    def create(cls, arch: ArchConfig, seed: int) -> SegmentationNet:
        return cls(arch, init_params(arch, seed))

    # -- persistence ------------------------------------------------------

    def save(self, path: str | Path, provenance: dict[str, Any] | None = None) -> None:
        save_params(path, self.params, self.arch.model_dump(mode="json"), provenance)

    @classmethod
    def load(cls, path: str | Path) -> SegmentationNet:
        """Raises ``VersionError`` / ``ShapeError`` / ``IoError`` for bad checkpoints."""
        params, arch_doc = load_params(path)
        try:
            arch = ArchConfig.model_validate(arch_doc)
        except ValidationError as exc:
            raise VersionError(f"{path}: unreadable arch_config ({exc.errors()[0]['msg']})") from exc
        return cls(arch, params)

    # -- forward ----------------------------------------------------------

    def check_inputs(self, inputs: ModelInputs) -> None:
        if inputs.features.dims != self.arch.input_dims:
            raise ShapeError(f"{inputs.name}: feature dims {inputs.features.dims} != network {self.arch.input_dims}")

    def forward(
        self,
        inputs: ModelInputs,
        *,
        rng: np.random.Generator | None = None,
        membership: tuple[np.ndarray, int] | None = None,
    ) -> ForwardResult:
        """Step and type probabilities; *membership* pins the aggregation segments."""
        self.check_inputs(inputs)
        arch = self.arch
        step_prefix, type_prefix = _backbone_prefixes(arch)
        kwargs: dict[str, Any] = {"n_layers": arch.n_layers, "dropout": arch.dropout, "rng": rng}
        step_emb = backbone_forward(inputs.features, inputs.walk, self.params, prefix=step_prefix, **kwargs)
        type_emb = (
            step_emb
            if arch.joint
            else backbone_forward(inputs.features, inputs.walk, self.params, prefix=type_prefix, **kwargs)
        )
        step_probs = step_head(step_emb, self.params)
        if membership is None:
            membership = step_membership(step_probs.value)
        step_agg = aggregate_step_embeddings(type_emb, step_probs, arch.aggregation, membership)
        type_probs = type_head(type_emb, step_agg, self.params)
        return ForwardResult(step_probs=step_probs, type_probs=type_probs, membership=membership)

    def loss(
        self,
        inputs: ModelInputs,
        weights: tuple[float, float] = (1.0, 1.0),
        *,
        rng: np.random.Generator | None = None,
        assignment: Assignment | None = None,
        membership: tuple[np.ndarray, int] | None = None,
    ) -> LossTerms:
        """Step, type and weighted total loss.

        Passing the *assignment* and *membership* of an earlier call holds every
        selection fixed, so the loss is a smooth function of the parameters.
        """
        if inputs.step_targets is None or inputs.type_targets is None:
            raise ShapeError(f"{inputs.name}: model has no labels to train on")
        if inputs.n_steps > self.arch.k_s:
            raise ShapeError(f"{inputs.name}: {inputs.n_steps} steps exceed k_s={self.arch.k_s}")
        out = self.forward(inputs, rng=rng, membership=membership)
        l_step, matched = step_loss(one_hot(inputs.step_targets, self.arch.k_s), out.step_probs, assignment)
        l_type = type_loss(one_hot(inputs.type_targets, self.arch.k_t), out.type_probs)
        return LossTerms(
            step=l_step,
            type=l_type,
            total=total_loss(l_step, l_type, weights),
            assignment=matched,
            membership=out.membership,
        )

    def predict_inputs(self, inputs: ModelInputs) -> Prediction:
        out = self.forward(inputs)
        steps = StepPrediction.from_probs(out.step_probs.value)
        types = TypePrediction.from_probs(out.type_probs.value)
        return Prediction(
            model=inputs.name,
            vocabulary=self.arch.vocabulary,
            op_type=types.labels,
            op_step=steps.labels,
            type_probs=types.probs,
            step_probs=steps.probs,
        )

    def predict(self, b: BRep) -> Prediction:
        """Per-face argmax type and step; no matching at inference."""
        return self.predict_inputs(prepare_inputs(b, self.arch.grid_resolution))
