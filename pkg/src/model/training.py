"""Mini-batch training loop.

A batch is a list of whole models. Each model's loss graph is built and
differentiated independently (optionally on a thread pool); the batch
gradient is the mean of the per-model gradients, summed in batch order so
results do not depend on the worker count.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from opentelemetry import trace

from src.brep.model import VOCABULARIES, BRep
from src.config.run_config import RunConfig
from src.config.settings import get_settings
from src.errors import ConfigError, IoError, VocabularyMismatch
from src.model.network import ArchConfig, ModelInputs, SegmentationNet, prepare_inputs
from src.nn.autograd import backward
from src.nn.optim import AdamState, adam_step

logger = logging.getLogger(__name__)
tracer = trace.get_tracer(__name__)

LOSS_COLUMNS = ("epoch", "l_step", "l_type", "l_total")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    l_step: float
    l_type: float
    l_total: float
    l_val: float | None = None


@dataclass
class TrainResult:
    net: SegmentationNet
    history: list[EpochRecord]


def check_vocabulary(models: Sequence[BRep], vocabulary: tuple[str, ...]) -> None:
    for b in models:
        if tuple(b.vocabulary) != vocabulary:
            raise VocabularyMismatch(f"{b.name}: vocabulary {list(b.vocabulary)} != {list(vocabulary)}")


def resolve_k_s(config: RunConfig, inputs: Sequence[ModelInputs]) -> int:
    """``k_s`` from the config, or the largest step count in the given models for ``auto``."""
    needed = max((i.n_steps for i in inputs), default=1)
    if config.k_s == "auto":
        return max(needed, 1)
    if config.k_s < needed:
        raise ConfigError(f"k_s={config.k_s} is below the {needed} steps present in the training/validation data")
    return config.k_s


def batch_order(n_models: int, batch_size: int, seed: int, epoch: int) -> list[np.ndarray]:
    order = np.random.default_rng([seed, epoch]).permutation(n_models)
    return [order[i : i + batch_size] for i in range(0, n_models, batch_size)]


def _model_step(
    net: SegmentationNet,
    inputs: ModelInputs,
    weights: tuple[float, float],
    rng: np.random.Generator | None,
) -> tuple[dict[str, np.ndarray], tuple[float, float, float]]:
    terms = net.loss(inputs, weights, rng=rng)
    return backward(terms.total, net.params), terms.values()


def _mean_gradients(parts: Sequence[Mapping[str, np.ndarray]], names: Sequence[str]) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    for name in names:
        total = parts[0][name].copy()
        for grads in parts[1:]:
            total += grads[name]
        out[name] = total / len(parts)
    return out


def mean_loss(net: SegmentationNet, inputs: Sequence[ModelInputs], weights: tuple[float, float], pool: ThreadPoolExecutor) -> float:
    values = list(pool.map(lambda i: float(net.loss(i, weights).total.value), inputs))
    return float(np.mean(values)) if values else float("nan")


def train(
    config: RunConfig,
    train_models: Sequence[BRep],
    val_models: Sequence[BRep] = (),
    *,
    threads: int | None = None,
) -> TrainResult:
    """Train a network from scratch on *train_models*.

    Raises:
        VocabularyMismatch: A model uses a different type vocabulary.
        ConfigError: ``k_s`` is smaller than a training model's step count.
    """
    if not train_models:
        raise ConfigError("training needs at least one model")
    if config.vocabulary not in VOCABULARIES:
        raise ConfigError(f"unknown vocabulary {config.vocabulary!r}; known: {sorted(VOCABULARIES)}")
    vocabulary = VOCABULARIES[config.vocabulary].names
    check_vocabulary([*train_models, *val_models], vocabulary)

    train_inputs = [prepare_inputs(b, config.grid_resolution) for b in train_models]
    val_inputs = [prepare_inputs(b, config.grid_resolution) for b in val_models]
    k_s = resolve_k_s(config, [*train_inputs, *val_inputs])
    arch = ArchConfig.from_run_config(config, k_s, vocabulary)
    net = SegmentationNet.create(arch, config.seed)
    state = AdamState(lr=config.lr, beta1=config.betas[0], beta2=config.betas[1], eps=config.eps)
    weights = config.loss_weights
    names = net.params.names()
    workers = get_settings().resolve_threads(threads if threads is not None else (config.threads or None))

    logger.info(
        "Training started",
        extra={"n_train": len(train_inputs), "n_val": len(val_inputs), "k_s": k_s, "workers": workers},
    )
    history: list[EpochRecord] = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for epoch in range(1, config.epochs + 1):
            with tracer.start_as_current_span("train.epoch") as span:
                span.set_attribute("cadops.epoch", epoch)
                sums = np.zeros(3)
                for batch in batch_order(len(train_inputs), config.batch_size, config.seed, epoch):

                    def run(index: int, epoch: int = epoch) -> tuple[dict[str, np.ndarray], tuple[float, float, float]]:
                        rng = np.random.default_rng([config.seed, epoch, int(index)]) if config.dropout > 0 else None
                        return _model_step(net, train_inputs[index], weights, rng)

                    results = list(pool.map(run, batch))
                    for _, values in results:
                        sums += values
                    adam_step(net.params, _mean_gradients([g for g, _ in results], names), state)

                l_step, l_type, l_total = (sums / len(train_inputs)).tolist()
                l_val = mean_loss(net, val_inputs, weights, pool) if val_inputs else None
                record = EpochRecord(epoch=epoch, l_step=l_step, l_type=l_type, l_total=l_total, l_val=l_val)
                history.append(record)
                span.set_attribute("cadops.l_total", l_total)
                logger.info(
                    "Epoch complete",
                    extra={"epoch": epoch, "l_step": l_step, "l_type": l_type, "l_total": l_total, "l_val": l_val},
                )
    return TrainResult(net=net, history=history)


def format_loss_log(history: Sequence[EpochRecord], provenance: Mapping[str, Any] | None = None) -> str:
    """CSV text; a leading ``#`` line carries the provenance block."""
    with_val = any(r.l_val is not None for r in history)
    buffer = io.StringIO()
    if provenance is not None:
        buffer.write("# " + json.dumps(provenance, sort_keys=True) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([*LOSS_COLUMNS, "l_val"] if with_val else LOSS_COLUMNS)
    for r in history:
        row: list[Any] = [r.epoch, repr(r.l_step), repr(r.l_type), repr(r.l_total)]
        if with_val:
            row.append("" if r.l_val is None else repr(r.l_val))
        writer.writerow(row)
    return buffer.getvalue()


def write_loss_log(path: str | Path, history: Sequence[EpochRecord], provenance: Mapping[str, Any] | None = None) -> None:
    try:
        Path(path).write_text(format_loss_log(history, provenance), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
