"""Argument parser for the ``cadops`` command."""

from __future__ import annotations

import argparse

from src.brep.model import VOCABULARIES


def _k_s(value: str) -> int | str:
    if value == "auto":
        return value
    try:
        return int(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"k_s must be an integer or 'auto', got {value!r}") from exc


def _step_range(value: str) -> tuple[int, int]:
    lo, sep, hi = value.partition("..")
    try:
        return (int(lo), int(hi)) if sep else (int(value), int(value))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"steps must be LO..HI or a single count, got {value!r}") from exc


def _add_threads(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threads", type=int, default=None, help="worker threads (0 = all cores)")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML run configuration; flags override its values")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--betas", type=float, nargs=2, default=None, metavar=("B1", "B2"))
    p.add_argument("--grid-resolution", dest="grid_resolution", type=int, default=None)
    p.add_argument("--n-layers", dest="n_layers", type=int, default=None)
    p.add_argument("--hidden", type=int, default=None)
    p.add_argument("--d-emb", dest="d_emb", type=int, default=None)
    p.add_argument("--aggregation", choices=["avg", "max", "sum_softmax", "soft_labels", "none"], default=None)
    p.add_argument("--independent", dest="joint", action="store_const", const=False, default=None,
                   help="train op.type and op.step on separate backbones")
    p.add_argument("--k-s", dest="k_s", type=_k_s, default=None)
    p.add_argument("--loss-weights", dest="loss_weights", type=float, nargs=2, default=None, metavar=("W_STEP", "W_TYPE"))
    p.add_argument("--dropout", type=float, default=None)
    p.add_argument("--vocabulary", choices=sorted(VOCABULARIES), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cadops",
        description="CAD operation type/step segmentation on B-Rep solids",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a labeled synthetic dataset")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--count", type=int, default=100)
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--steps", type=_step_range, default=(1, 4), metavar="LO..HI",
                     help="operations per model, inclusive range")
    gen.add_argument("--profile", choices=["rect", "convex", "mixed"], default="mixed")
    gen.add_argument("--no-cuts", dest="allow_cut", action="store_false", help="only additive extrusions")

    validate = sub.add_parser("validate", help="check B-Rep files for topology violations")
    validate.add_argument("inputs", nargs="+", help="B-Rep JSON files")

    train = sub.add_parser("train", help="train a network on a dataset's train split")
    train.add_argument("--data", required=True, help="dataset directory or manifest")
    train.add_argument("--out", required=True, help="output directory for checkpoint and loss log")
    _add_train_flags(train)
    _add_threads(train)

    ev = sub.add_parser("eval", help="score predictions on a dataset split")
    ev.add_argument("--data", required=True, help="dataset directory or manifest")
    source = ev.add_mutually_exclusive_group(required=True)
    source.add_argument("--checkpoint", help="trained checkpoint")
    source.add_argument("--predictions", help="directory of <model>.pred.json files")
    ev.add_argument("--split", choices=["train", "val", "test"], default="test")
    ev.add_argument("--out", required=True, help="report directory")
    _add_threads(ev)

    predict = sub.add_parser("predict", help="predict per-face op.type and op.step")
    predict.add_argument("--checkpoint", required=True)
    predict.add_argument("--input", dest="inputs", nargs="+", required=True, help="B-Rep JSON files")
    predict.add_argument("--out", required=True, help="output directory")
    predict.add_argument("--dump-features", dest="dump_features", action="store_true",
                         help="also write <model>.features.json")

    sketch = sub.add_parser("sketch", help="recover extrusion sketches from a prediction")
    sketch.add_argument("--input", required=True, help="prediction JSON")
    sketch.add_argument("--brep", required=True, help="B-Rep JSON the prediction refers to")
    sketch.add_argument("--out", required=True, help="output directory")
    sketch.add_argument("--samples", type=int, default=None, help="points per curved edge")
    sketch.add_argument("--include-cuts", dest="include_cuts", action="store_true")
    sketch.add_argument("--project-grid", dest="project_grid", action="store_true")
    sketch.add_argument("--reference", action="store_true",
                        help="report deviation from sketches recovered from the B-Rep's own labels")
    return parser
