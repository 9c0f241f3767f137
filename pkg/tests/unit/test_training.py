from __future__ import annotations

import math

import numpy as np
import pytest

from src.config.run_config import RunConfig
from src.errors import ConfigError, VocabularyMismatch
from src.model.network import prepare_inputs
from src.model.training import EpochRecord, batch_order, format_loss_log, resolve_k_s, train
from src.synth.generator import GenParams, generate_model

TINY = {"epochs": 3, "batch_size": 2, "hidden": 8, "d_emb": 8, "grid_resolution": 2, "lr": 1e-2}


@pytest.fixture(scope="module")
def models():
    params = GenParams(steps_min=1, steps_max=2)
    return [generate_model(seed, params) for seed in range(3)]


class TestTrain:
    def test_deterministic_across_thread_counts(self, models):
        config = RunConfig(seed=4, **TINY)
        one = train(config, models, threads=1)
        many = train(config, models, threads=3)
        assert one.net.params.equal(many.net.params)
        assert one.history == many.history

    def test_history_is_finite(self, models):
        result = train(RunConfig(k_s=2, **TINY), models[:2], models[2:])
        assert [r.epoch for r in result.history] == [1, 2, 3]
        for r in result.history:
            assert math.isfinite(r.l_total)
            assert r.l_val is not None
            assert r.l_total == pytest.approx(r.l_step + r.l_type)

    def test_auto_k_s_uses_largest_step_count(self, models):
        result = train(RunConfig(**TINY), models)
        inputs = [prepare_inputs(b, 2) for b in models]
        assert result.net.arch.k_s == max(i.n_steps for i in inputs)

    def test_independent_heads(self, models):
        result = train(RunConfig(joint=False, aggregation="none", **TINY), models[:1])
        assert result.net.arch.joint is False

    def test_no_models(self):
        with pytest.raises(ConfigError):
            train(RunConfig(**TINY), [])

    def test_vocabulary_mismatch(self, models):
        with pytest.raises(VocabularyMismatch):
            train(RunConfig(vocabulary="cc3d11", **TINY), models)


class TestHelpers:
    def test_k_s_below_data(self, stacked):
        inputs = [prepare_inputs(stacked, 2)]
        with pytest.raises(ConfigError, match="k_s=1"):
            resolve_k_s(RunConfig(k_s=1), inputs)
        assert resolve_k_s(RunConfig(k_s=5), inputs) == 5
        assert resolve_k_s(RunConfig(), inputs) == 2

    def test_batch_order_covers_every_model(self):
        batches = batch_order(7, 3, seed=1, epoch=2)
        assert [len(b) for b in batches] == [3, 3, 1]
        assert sorted(np.concatenate(batches).tolist()) == list(range(7))
        assert [b.tolist() for b in batch_order(7, 3, 1, 2)] == [b.tolist() for b in batches]

    def test_loss_log_format(self):
        history = [EpochRecord(1, 0.5, 0.25, 0.75), EpochRecord(2, 0.4, 0.2, 0.6000000000000001, l_val=0.7)]
        text = format_loss_log(history, {"seed": 0})
        lines = text.splitlines()
        assert lines[0] == '# {"seed": 0}'
        assert lines[1] == "epoch,l_step,l_type,l_total,l_val"
        assert lines[2] == "1,0.5,0.25,0.75,"
        assert lines[3] == "2,0.4,0.2,0.6000000000000001,0.7"

    def test_loss_log_without_validation(self):
        text = format_loss_log([EpochRecord(1, 0.5, 0.25, 0.75)])
        assert text.splitlines() == ["epoch,l_step,l_type,l_total", "1,0.5,0.25,0.75"]
