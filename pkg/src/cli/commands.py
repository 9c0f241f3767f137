"""Subcommand implementations. Each returns a process exit code."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Mapping
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from src.brep.io import read_brep
from src.brep.validation import validate_topology
from src.config.run_config import config_as_dict, load_config
from src.config.settings import get_settings
from src.config.telemetry import set_correlation_context
from src.errors import ConfigError, IoError
from src.features.extract import dump_features, extract_features
from src.metrics.evaluation import evaluate_dataset, write_report
from src.model.network import SegmentationNet
from src.model.prediction import PREDICTION_SUFFIX, prediction_from_labels, read_prediction, write_prediction
from src.model.training import train, write_loss_log
from src.provenance import hash_file, provenance_block
from src.sketch.recovery import Sketch, recover_sketches, sketch_deviation
from src.sketch.svg import export_svg
from src.synth.dataset import generate_dataset, load_manifest, manifest_path, read_split
from src.synth.generator import GenParams

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.json"
LOSS_LOG_NAME = "loss.csv"
SKETCHES_NAME = "sketches.json"


def _out(line: str) -> None:
    sys.stdout.write(line + "\n")


def _mkdir(path: str | Path) -> Path:
    root = Path(path)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {root}: {exc}") from exc
    return root


def _write_json(path: Path, payload: Mapping[str, Any]) -> None:
    try:
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _seed(value: int | None) -> int:
    return get_settings().CADOPS_SEED if value is None else value


def _split_hashes(data: str | Path, splits: tuple[str, ...]) -> dict[str, str]:
    path = manifest_path(data)
    manifest = load_manifest(path)
    hashes = {path.name: hash_file(path)}
    for split in splits:
        for name in manifest.files(split):  # type: ignore[arg-type]
            hashes[name] = hash_file(path.parent / name)
    return hashes


# ---------------------------------------------------------------------------
# gen / validate
# ---------------------------------------------------------------------------


def cmd_gen(args: argparse.Namespace) -> int:
    try:
        params = GenParams(
            seed=_seed(args.seed),
            n_models=args.count,
            steps_min=args.steps[0],
            steps_max=args.steps[1],
            profile=args.profile,
            allow_cut=args.allow_cut,
        )
    except ValidationError as exc:
        raise ConfigError(f"invalid generation parameters: {exc.errors()[0]['msg']}") from exc
    manifest = generate_dataset(params, args.out)
    _out(f"wrote {len(manifest.models)} models to {args.out}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    failed = 0
    for path in args.inputs:
        report = validate_topology(read_brep(path, check_topology=False))
        if report.ok:
            _out(f"{path}: ok")
            continue
        failed += 1
        _out(f"{path}: {len(report.violations)} violation(s)")
        for violation in report.violations:
            _out(f"  {violation}")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# train / eval / predict
# ---------------------------------------------------------------------------

_CONFIG_FLAGS = (
    "seed",
    "epochs",
    "batch_size",
    "lr",
    "betas",
    "grid_resolution",
    "n_layers",
    "hidden",
    "d_emb",
    "aggregation",
    "joint",
    "k_s",
    "loss_weights",
    "dropout",
    "vocabulary",
)


def cmd_train(args: argparse.Namespace) -> int:
    overrides = {key: getattr(args, key) for key in _CONFIG_FLAGS}
    if overrides["seed"] is None and args.config is None:
        overrides["seed"] = get_settings().CADOPS_SEED
    if overrides["joint"] is False and overrides["aggregation"] is None:
        overrides["aggregation"] = "none"
    for key in ("betas", "loss_weights"):
        if overrides[key] is not None:
            overrides[key] = tuple(overrides[key])
    config = load_config(args.config, overrides)

    train_models = read_split(args.data, "train")
    val_models = read_split(args.data, "val")
    result = train(config, train_models, val_models, threads=args.threads)

    out = _mkdir(args.out)
    provenance = provenance_block(config_as_dict(config), _split_hashes(args.data, ("train", "val")))
    result.net.save(out / CHECKPOINT_NAME, provenance)
    write_loss_log(out / LOSS_LOG_NAME, result.history, provenance)
    last = result.history[-1]
    _out(f"trained {config.epochs} epochs; final l_total={last.l_total:.6f}; checkpoint {out / CHECKPOINT_NAME}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    report = evaluate_dataset(
        args.data,
        checkpoint=args.checkpoint,
        predictions_dir=args.predictions,
        split=args.split,
        threads=args.threads,
    )
    inputs = _split_hashes(args.data, (args.split,))
    if args.checkpoint:
        inputs[Path(args.checkpoint).name] = hash_file(args.checkpoint)
    write_report(report, args.out, provenance_block({"split": args.split}, inputs))
    _out(
        f"type mAcc {100 * report.type_macc:.1f}  type mIoU {100 * report.type_miou:.1f}  "
        f"step mAcc {100 * report.step_macc:.1f}  R_C {100 * report.r_c:.1f}  mS_C {100 * report.ms_c:.1f}"
    )
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    net = SegmentationNet.load(args.checkpoint)
    out = _mkdir(args.out)
    arch = net.arch.model_dump(mode="json")
    checkpoint_hash = hash_file(args.checkpoint)
    for path in args.inputs:
        b = read_brep(path)
        set_correlation_context(model_name=b.name)
        pred = net.predict(b)
        provenance = provenance_block(arch, {Path(path).name: hash_file(path), Path(args.checkpoint).name: checkpoint_hash})
        write_prediction(pred, out / f"{b.name}{PREDICTION_SUFFIX}", provenance)
        if args.dump_features:
            _, fm = extract_features(b, net.arch.grid_resolution)
            dump_features(fm, out / f"{b.name}.features.json")
        logger.info("Predicted model", extra={"n_faces": b.n_faces})
    _out(f"wrote {len(args.inputs)} prediction(s) to {out}")
    return 0


# ---------------------------------------------------------------------------
# sketch
# ---------------------------------------------------------------------------


def _sketch_entry(sketch: Sketch, svg_name: str | None, deviation: float | None) -> dict[str, Any]:
    return {
        "step_id": sketch.step_id,
        "status": sketch.status,
        "axis": sketch.axis.tolist(),
        "origin": sketch.origin.tolist(),
        "basis": [sketch.basis[0].tolist(), sketch.basis[1].tolist()],
        "source_faces": list(sketch.source_faces),
        "segments": sketch.segments.tolist(),
        "svg": svg_name,
        "deviation": deviation,
    }


def _reference_deviation(sketch: Sketch, references: list[Sketch]) -> float | None:
    candidates = [r for r in references if r.status != "degenerate" and len(r.segments)]
    if sketch.status == "degenerate" or not len(sketch.segments) or not candidates:
        return None
    return min(sketch_deviation(sketch, r) for r in candidates)


def cmd_sketch(args: argparse.Namespace) -> int:
    b = read_brep(args.brep)
    pred = read_prediction(args.input)
    set_correlation_context(model_name=b.name)
    samples = args.samples if args.samples is not None else get_settings().CADOPS_SKETCH_SAMPLES
    options = {"include_cuts": args.include_cuts, "project_grid": args.project_grid}
    sketches = recover_sketches(b, pred, samples, **options)
    references = recover_sketches(b, prediction_from_labels(b), samples, **options) if args.reference else []

    out = _mkdir(args.out)
    entries: list[dict[str, Any]] = []
    for sketch in sketches:
        svg_name = None
        if sketch.status != "degenerate" and len(sketch.segments):
            svg_name = f"{b.name}_step{sketch.step_id}.svg"
            try:
                (out / svg_name).write_text(export_svg(sketch), encoding="utf-8")
            except OSError as exc:
                raise IoError(f"cannot write {out / svg_name}: {exc}") from exc
        deviation = _reference_deviation(sketch, references) if args.reference else None
        entries.append(_sketch_entry(sketch, svg_name, deviation))

    config = {"samples": samples, **options}
    inputs = {Path(args.brep).name: hash_file(args.brep), Path(args.input).name: hash_file(args.input)}
    _write_json(out / SKETCHES_NAME, {"model": b.name, "sketches": entries, "provenance": provenance_block(config, inputs)})
    _out(f"recovered {len(sketches)} sketch(es) for {b.name}")
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "validate": cmd_validate,
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "sketch": cmd_sketch,
}
