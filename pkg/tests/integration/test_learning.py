"""Scaled-down learning checks on generated data (minutes of CPU time)."""

from __future__ import annotations

from functools import cache

import numpy as np
import pytest

from src.brep.model import BRep
from src.config.run_config import RunConfig
from src.metrics import evaluate
from src.model.prediction import prediction_from_labels
from src.model.training import TrainResult, train
from src.synth.generator import GenParams, generate_model
from src.synth.rng import derive_seed

pytestmark = pytest.mark.acceptance

FIT = {"epochs": 120, "batch_size": 4, "hidden": 16, "d_emb": 16, "grid_resolution": 3, "lr": 1e-2, "threads": 2}


def _split(seed: int, n: int) -> list[BRep]:
    params = GenParams(seed=seed, steps_min=1, steps_max=4)
    return [generate_model(derive_seed(seed, i), params) for i in range(n)]


@cache
def _training_models() -> tuple[BRep, ...]:
    return tuple(_split(7, 32))


@cache
def _held_out_models() -> tuple[BRep, ...]:
    return tuple(_split(8, 200))


@cache
def _overfit_run(aggregation: str, seed: int) -> TrainResult:
    config = RunConfig(seed=seed, epochs=500, batch_size=8, aggregation=aggregation)
    return train(config, list(_training_models()))


def _report(result: TrainResult, models):
    return evaluate([result.net.predict(b) for b in models], [prediction_from_labels(b) for b in models])


class TestSmallFits:
    @pytest.fixture(scope="class")
    def models(self):
        params = GenParams(steps_min=1, steps_max=2, allow_cut=False)
        return [generate_model(seed, params) for seed in range(4)]

    @pytest.mark.parametrize("aggregation", ["avg", "soft_labels"])
    def test_joint_network_fits_training_models(self, models, aggregation):
        result = train(RunConfig(aggregation=aggregation, **FIT), models)
        first, last = result.history[0], result.history[-1]
        assert last.l_total < 0.75 * first.l_total

        report = _report(result, models)
        assert report.type_macc > 0.5
        assert 0.0 <= report.r_c <= 1.0

    def test_independent_heads_fit_training_models(self, models):
        result = train(RunConfig(joint=False, aggregation="none", **FIT), models)
        assert result.history[-1].l_total < 0.75 * result.history[0].l_total


class TestSingleModel:
    @pytest.fixture(scope="class")
    def result(self):
        (model,) = _split(7, 1)
        return train(RunConfig(seed=7, epochs=300, batch_size=1), [model])

    def test_loss_reaches_floor(self, result):
        assert len(result.history) == 300
        assert result.history[-1].l_total < 0.05

    def test_smoothed_loss_never_rises(self, result):
        losses = np.array([r.l_total for r in result.history])
        windows = losses.reshape(-1, 50).mean(axis=1)
        assert np.all(np.diff(windows) <= 0.0), windows


class TestOverfit:
    def test_training_split_is_learned(self):
        result = _overfit_run("avg", 7)
        report = _report(result, _training_models())
        assert report.type_macc >= 0.95
        assert report.step_macc >= 0.90
        assert result.history[-1].l_total <= 0.10

    def test_held_out_split_floors(self):
        report = _report(_overfit_run("avg", 7), _held_out_models())
        assert report.type_macc >= 0.85
        assert report.step_macc >= 0.70

    def test_aggregation_raises_consistency(self):
        seeds = (7, 8, 9)
        with_avg = [_report(_overfit_run("avg", s), _held_out_models()).r_c for s in seeds]
        without = [_report(_overfit_run("none", s), _held_out_models()).r_c for s in seeds]
        assert np.mean(with_avg) >= np.mean(without)
