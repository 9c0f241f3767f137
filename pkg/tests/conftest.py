"""Shared fixtures: small hand-built solids and generated models."""

from __future__ import annotations

import pytest

from src.brep.model import BRep
from src.config.settings import get_settings
from src.synth.generator import GenParams, SolidBuilder

SQUARE = [(-1.0, -1.0, 0.0), (1.0, -1.0, 0.0), (1.0, 1.0, 0.0), (-1.0, 1.0, 0.0)]
BOSS = [(-0.5, -0.5, 2.0), (0.5, -0.5, 2.0), (0.5, 0.5, 2.0), (-0.5, 0.5, 2.0)]


@pytest.fixture(autouse=True)
def _clear_settings_cache():
    """Settings are lru_cached; make env overrides in one test invisible to the next."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


def make_box() -> BRep:
    """2 x 2 x 2 box: face 0 bottom, 1-4 sides, 5 top."""
    builder = SolidBuilder()
    builder.extrude(SQUARE, (0.0, 0.0, 1.0), 2.0)
    return builder.build("box")


def make_stacked() -> tuple[BRep, SolidBuilder]:
    """Box plus a 1 x 1 x 1 boss on its top face (faces 6-9 sides, 10 top)."""
    builder = SolidBuilder()
    builder.extrude(SQUARE, (0.0, 0.0, 1.0), 2.0)
    builder.extrude(BOSS, (0.0, 0.0, 1.0), 1.0, host=5)
    return builder.build("stacked"), builder


@pytest.fixture
def box() -> BRep:
    return make_box()


@pytest.fixture
def stacked() -> BRep:
    return make_stacked()[0]


@pytest.fixture
def small_params() -> GenParams:
    return GenParams(seed=7, n_models=6, steps_min=1, steps_max=3)
