from __future__ import annotations

import os

import pytest

from src.config.settings import Settings, get_settings


def test_settings_defaults():
    s = Settings()
    assert s.CADOPS_SEED == 0
    assert s.CADOPS_SKETCH_SAMPLES == 16
    assert s.CADOPS_GRID_RESOLUTION == 5
    assert s.OTEL_ENABLED is False


def test_seed_env_override(monkeypatch):
    monkeypatch.setenv("CADOPS_SEED", "42")
    assert Settings().CADOPS_SEED == 42


def test_get_settings_is_cached():
    assert get_settings() is get_settings()


class TestResolveThreads:
    def test_explicit_count_wins(self):
        assert Settings(CADOPS_THREADS=3).resolve_threads(2) == 2

    def test_falls_back_to_setting(self):
        assert Settings(CADOPS_THREADS=3).resolve_threads() == 3

    def test_zero_means_all_cores(self):
        assert Settings().resolve_threads(0) == (os.cpu_count() or 1)

    def test_negative_rejected(self):
        with pytest.raises(ValueError, match=">= 0"):
            Settings().resolve_threads(-1)
