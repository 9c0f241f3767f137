"""Shared fixtures for CLI integration tests."""

from __future__ import annotations

from pathlib import Path

import pytest

from src.main import run

TINY_TRAIN = ["--epochs", "2", "--batch-size", "4", "--hidden", "8", "--d-emb", "8", "--grid-resolution", "2", "--threads", "1"]


@pytest.fixture(scope="session")
def dataset(tmp_path_factory) -> Path:
    """Twelve generated models (8 train / 2 val / 2 test by the contiguous split)."""
    out = tmp_path_factory.mktemp("data")
    assert run(["gen", "--out", str(out), "--count", "12", "--seed", "3", "--steps", "1..2"]) == 0
    return out


@pytest.fixture(scope="session")
def checkpoint(dataset, tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("run")
    assert run(["train", "--data", str(dataset), "--out", str(out), "--seed", "1", *TINY_TRAIN]) == 0
    return out / "checkpoint.json"
