from __future__ import annotations

import pytest

from src.cli import build_parser
from src.main import EXIT_OK, EXIT_USAGE, run
from src.synth.dataset import load_manifest


class TestGenSteps:
    def test_range(self):
        args = build_parser().parse_args(["gen", "--out", "data", "--steps", "2..5"])
        assert args.steps == (2, 5)

    def test_single_count(self):
        args = build_parser().parse_args(["gen", "--out", "data", "--steps", "3"])
        assert args.steps == (3, 3)

    def test_default(self):
        assert build_parser().parse_args(["gen", "--out", "data"]).steps == (1, 4)

    @pytest.mark.parametrize("value", ["a..b", "1..", "..4", "1-4"])
    def test_malformed_is_usage_error(self, tmp_path, value):
        assert run(["gen", "--out", str(tmp_path), "--steps", value]) == EXIT_USAGE

    def test_range_reaches_generator(self, tmp_path):
        assert run(["gen", "--out", str(tmp_path), "--count", "4", "--seed", "2", "--steps", "3..3"]) == EXIT_OK
        assert [m.k for m in load_manifest(tmp_path).models] == [3, 3, 3, 3]

    def test_reversed_range_is_usage_error(self, tmp_path):
        assert run(["gen", "--out", str(tmp_path), "--steps", "4..2"]) == EXIT_USAGE
