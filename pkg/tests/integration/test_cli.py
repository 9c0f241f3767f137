"""End-to-end runs of the ``cadops`` command line through ``src.main.run``."""

from __future__ import annotations

import json

import pytest

from src.main import EXIT_DOMAIN_ERROR, EXIT_OK, EXIT_USAGE, run
from src.model.prediction import prediction_from_labels, write_prediction
from src.synth.dataset import MANIFEST_NAME, load_manifest, read_split
from tests.integration.conftest import TINY_TRAIN

pytestmark = pytest.mark.integration


class TestGen:
    def test_same_seed_same_bytes(self, dataset, tmp_path):
        out = tmp_path / "again"
        assert run(["gen", "--out", str(out), "--count", "12", "--seed", "3", "--steps", "1..2"]) == EXIT_OK
        for path in sorted(dataset.iterdir()):
            assert path.read_bytes() == (out / path.name).read_bytes(), path.name

    def test_split_layout(self, dataset):
        splits = [m.split for m in load_manifest(dataset).models]
        assert splits == ["train"] * 8 + ["val"] * 2 + ["test"] * 2

    def test_invalid_parameters(self, tmp_path, capsys):
        code = run(["gen", "--out", str(tmp_path), "--steps", "3..2"])
        assert code == EXIT_USAGE
        assert "cadops gen" in capsys.readouterr().err


class TestValidate:
    def test_generated_models_are_valid(self, dataset, capsys):
        files = [str(dataset / name) for name in load_manifest(dataset).files()]
        assert run(["validate", *files]) == EXIT_OK
        assert capsys.readouterr().out.count(": ok") == len(files)

    def test_reports_violations(self, dataset, tmp_path, capsys):
        name = load_manifest(dataset).files()[0]
        doc = json.loads((dataset / name).read_text(encoding="utf-8"))
        doc["coedges"][0]["mate"] = doc["coedges"][0]["id"]
        broken = tmp_path / "broken.brep.json"
        broken.write_text(json.dumps(doc), encoding="utf-8")
        assert run(["validate", str(dataset / name), str(broken)]) == EXIT_DOMAIN_ERROR
        out = capsys.readouterr().out
        assert f"{dataset / name}: ok" in out
        assert f"{broken}: " in out
        assert "violation" in out

    def test_unparseable_file(self, tmp_path):
        bad = tmp_path / "bad.brep.json"
        bad.write_text("{", encoding="utf-8")
        assert run(["validate", str(bad)]) == EXIT_DOMAIN_ERROR


class TestTrainEvalPredict:
    def test_train_writes_checkpoint_and_loss_log(self, checkpoint):
        assert checkpoint.exists()
        lines = (checkpoint.parent / "loss.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("# ")
        assert json.loads(lines[0][2:])["resolved_config"]["seed"] == 1
        assert lines[1] == "epoch,l_step,l_type,l_total,l_val"
        assert len(lines) == 4
        doc = json.loads(checkpoint.read_text(encoding="utf-8"))
        assert MANIFEST_NAME in doc["provenance"]["input_hashes"]

    def test_train_is_reproducible(self, dataset, checkpoint, tmp_path):
        assert run(["train", "--data", str(dataset), "--out", str(tmp_path), "--seed", "1", *TINY_TRAIN]) == EXIT_OK
        assert (tmp_path / "checkpoint.json").read_bytes() == checkpoint.read_bytes()

    def test_train_rejects_bad_config(self, dataset, tmp_path, capsys):
        config = tmp_path / "run.yaml"
        config.write_text("epochz: 3\n", encoding="utf-8")
        code = run(["train", "--data", str(dataset), "--out", str(tmp_path / "o"), "--config", str(config)])
        assert code == EXIT_USAGE
        assert "epochz" in capsys.readouterr().err

    def test_eval_with_checkpoint(self, dataset, checkpoint, tmp_path):
        out = tmp_path / "report"
        assert run(["eval", "--data", str(dataset), "--checkpoint", str(checkpoint), "--out", str(out), "--threads", "2"]) == EXIT_OK
        doc = json.loads((out / "report.json").read_text(encoding="utf-8"))
        assert doc["counts"]["n_models"] == 2
        for value in doc["metrics"].values():
            assert 0.0 <= value <= 100.0
        assert (out / "report.csv").exists()
        assert (out / "steps_breakdown.csv").exists()

    def test_eval_ground_truth_predictions(self, dataset, tmp_path, capsys):
        preds = tmp_path / "preds"
        preds.mkdir()
        for b in read_split(dataset, "test"):
            write_prediction(prediction_from_labels(b), preds / f"{b.name}.pred.json")
        out = tmp_path / "report"
        assert run(["eval", "--data", str(dataset), "--predictions", str(preds), "--out", str(out)]) == EXIT_OK
        metrics = json.loads((out / "report.json").read_text(encoding="utf-8"))["metrics"]
        assert metrics["type_macc"] == 100.0
        assert metrics["step_macc"] == 100.0
        assert metrics["r_c"] == 100.0
        assert "step mAcc 100.0" in capsys.readouterr().out

    def test_eval_needs_a_source(self, dataset, tmp_path):
        assert run(["eval", "--data", str(dataset), "--out", str(tmp_path)]) == EXIT_USAGE

    def test_eval_missing_dataset(self, checkpoint, tmp_path):
        code = run(["eval", "--data", str(tmp_path / "nowhere"), "--checkpoint", str(checkpoint), "--out", str(tmp_path)])
        assert code == EXIT_DOMAIN_ERROR

    def test_predict_and_sketch(self, dataset, checkpoint, tmp_path):
        name = load_manifest(dataset).files("test")[0]
        model = dataset / name
        preds = tmp_path / "preds"
        assert run(["predict", "--checkpoint", str(checkpoint), "--input", str(model), "--out", str(preds), "--dump-features"]) == EXIT_OK
        (pred_file,) = preds.glob("*.pred.json")
        doc = json.loads(pred_file.read_text(encoding="utf-8"))
        assert len(doc["faces"][0]["step_probs"]) >= 1
        assert list(preds.glob("*.features.json"))

        sketches = tmp_path / "sketches"
        assert run(["sketch", "--input", str(pred_file), "--brep", str(model), "--out", str(sketches)]) == EXIT_OK
        result = json.loads((sketches / "sketches.json").read_text(encoding="utf-8"))
        assert result["model"] == doc["model"]
        for entry in result["sketches"]:
            assert entry["status"] in {"ok", "fallback", "degenerate"}
            if entry["svg"] is not None:
                assert (sketches / entry["svg"]).exists()


class TestSketchAgainstGroundTruth:
    def test_ground_truth_sketches_have_zero_deviation(self, dataset, tmp_path):
        b = read_split(dataset, "test")[0]
        model = dataset / load_manifest(dataset).files("test")[0]
        pred_file = tmp_path / f"{b.name}.pred.json"
        write_prediction(prediction_from_labels(b), pred_file)
        out = tmp_path / "sketches"
        assert run(["sketch", "--input", str(pred_file), "--brep", str(model), "--out", str(out), "--reference"]) == EXIT_OK
        entries = json.loads((out / "sketches.json").read_text(encoding="utf-8"))["sketches"]
        assert entries
        for entry in entries:
            if entry["status"] != "degenerate":
                assert entry["deviation"] == pytest.approx(0.0, abs=1e-9)


class TestUsage:
    def test_no_command(self):
        assert run([]) == EXIT_USAGE

    def test_help(self, capsys):
        assert run(["--help"]) == EXIT_OK
        assert "cadops" in capsys.readouterr().out
