from __future__ import annotations

import pytest

from src.config.run_config import RunConfig, config_as_dict, load_config
from src.errors import ConfigError


class TestLoadConfig:
    def test_empty_gives_defaults(self):
        config = load_config()
        assert config.epochs == 200
        assert config.batch_size == 100
        assert config.lr == 1e-3
        assert config.betas == (0.9, 0.99)
        assert config.grid_resolution == 5
        assert config.n_layers == 2
        assert config.d_emb == 64
        assert config.aggregation == "avg"
        assert config.k_s == "auto"

    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("", encoding="utf-8")
        assert load_config(path) == RunConfig()

    def test_flag_overrides_file(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("lr: 0.5\nepochs: 3\n", encoding="utf-8")
        config = load_config(path, {"lr": 0.01, "epochs": None})
        assert config.lr == 0.01
        assert config.epochs == 3

    def test_misspelled_key_names_key(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("learning_rate: 0.1\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="learning_rate"):
            load_config(path)

    def test_non_mapping_root(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("- 1\n- 2\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="mapping"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.yaml")

    def test_non_positive_epochs(self):
        with pytest.raises(ConfigError):
            load_config(overrides={"epochs": 0})

    def test_independent_requires_no_aggregation(self):
        with pytest.raises(ConfigError):
            load_config(overrides={"joint": False, "aggregation": "avg"})
        assert load_config(overrides={"joint": False, "aggregation": "none"}).joint is False

    def test_k_s_must_be_positive(self):
        with pytest.raises(ConfigError):
            load_config(overrides={"k_s": 0})


def test_config_as_dict_is_json_ready():
    doc = config_as_dict(RunConfig(seed=3))
    assert doc["seed"] == 3
    assert doc["betas"] == [0.9, 0.99]
