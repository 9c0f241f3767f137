from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.errors import ConfigError

logger = logging.getLogger(__name__)

Aggregation = Literal["avg", "max", "sum_softmax", "soft_labels", "none"]


class RunConfig(BaseModel):
    """Resolved hyperparameters for a training / evaluation run.

    Defaults follow the published training setup; desk-scale runs override
    epochs and batch size.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: int = 0
    epochs: int = Field(default=200, gt=0)
    batch_size: int = Field(default=100, gt=0)
    lr: float = Field(default=1e-3, gt=0)
    betas: tuple[float, float] = (0.9, 0.99)
    eps: float = Field(default=1e-8, gt=0)
    grid_resolution: int = Field(default=5, ge=2)
    n_layers: int = Field(default=2, gt=0)
    hidden: int = Field(default=64, gt=0)
    d_emb: int = Field(default=64, gt=0)
    aggregation: Aggregation = "avg"
    joint: bool = True
    k_s: int | Literal["auto"] = "auto"
    loss_weights: tuple[float, float] = (1.0, 1.0)
    dropout: float = Field(default=0.0, ge=0.0, lt=1.0)
    vocabulary: str = "extrude4"
    threads: int = Field(default=0, ge=0)

    @field_validator("betas")
    @classmethod
    def _betas_in_range(cls, value: tuple[float, float]) -> tuple[float, float]:
        if not all(0.0 <= b < 1.0 for b in value):
            raise ValueError(f"betas must lie in [0, 1), got {value}")
        return value

    @field_validator("k_s")
    @classmethod
    def _k_s_positive(cls, value: int | str) -> int | str:
        if isinstance(value, int) and value < 1:
            raise ValueError(f"k_s must be >= 1, got {value}")
        return value

    @field_validator("loss_weights")
    @classmethod
    def _weights_non_negative(cls, value: tuple[float, float]) -> tuple[float, float]:
        if any(w < 0 for w in value):
            raise ValueError(f"loss weights must be >= 0, got {value}")
        return value

    @model_validator(mode="after")
    def _independent_has_no_aggregation(self) -> RunConfig:
        if not self.joint and self.aggregation != "none":
            raise ValueError("joint=false trains the heads separately and requires aggregation 'none'")
        return self


def _format_validation_error(exc: ValidationError) -> str:
    parts: list[str] = []
    for err in exc.errors():
        key = ".".join(str(p) for p in err["loc"]) or "<root>"
        if err["type"] == "extra_forbidden":
            parts.append(f"unknown key '{key}'")
        else:
            parts.append(f"{key}: {err['msg']}")
    return "; ".join(parts)


def load_config(
    path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
) -> RunConfig:
    """Build a :class:`RunConfig` from an optional YAML file plus flag overrides.

    Flags win over the file; ``None`` override values are ignored so unset
    argparse options never clobber file values.

    Raises:
        ConfigError: On unreadable files, non-mapping documents, unknown keys
            or out-of-range values.
    """
    raw: dict[str, Any] = {}
    if path is not None:
        config_path = Path(path)
        try:
            text = config_path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        try:
            loaded = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {config_path}: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config root must be a mapping, got {type(loaded).__name__}")
        raw.update(loaded)
        logger.debug("Loaded %d config keys from %s", len(loaded), config_path)

    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value

    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_format_validation_error(exc)) from exc


def config_as_dict(config: RunConfig) -> dict[str, Any]:
    """JSON-ready view used in artifact provenance blocks."""
    return config.model_dump(mode="json")
