from __future__ import annotations

import json

import numpy as np
import pytest
from pydantic import ValidationError

from src.brep.model import VOCABULARIES
from src.brep.topology import permute_ids
from src.errors import ShapeError, VersionError
from src.model.network import ArchConfig, SegmentationNet, prepare_inputs
from src.nn.autograd import backward
from src.synth.generator import GenParams, generate_model
from src.synth.rng import derive_seed

VOCAB = VOCABULARIES["extrude4"].names


def _arch(**overrides) -> ArchConfig:
    fields = {
        "d_emb": 4,
        "n_layers": 2,
        "hidden": 4,
        "grid_resolution": 2,
        "k_t": len(VOCAB),
        "k_s": 2,
        "vocabulary": VOCAB,
    }
    fields.update(overrides)
    return ArchConfig(**fields)


class TestArchConfig:
    def test_independent_rejects_aggregation(self):
        with pytest.raises(ValidationError):
            _arch(joint=False, aggregation="avg")

    def test_vocabulary_length_must_match(self):
        with pytest.raises(ValidationError):
            _arch(k_t=3)

    def test_input_dims(self):
        assert _arch(grid_resolution=5).input_dims == (157, 23, 1)


class TestForward:
    def test_rows_are_distributions(self, stacked):
        net = SegmentationNet.create(_arch(), seed=0)
        out = net.forward(prepare_inputs(stacked, 2))
        assert out.step_probs.shape == (11, 2)
        assert out.type_probs.shape == (11, len(VOCAB))
        np.testing.assert_allclose(out.step_probs.value.sum(axis=1), 1.0)
        np.testing.assert_allclose(out.type_probs.value.sum(axis=1), 1.0)

    @pytest.mark.parametrize("aggregation", ["avg", "max", "sum_softmax", "soft_labels", "none"])
    def test_every_aggregation_runs(self, stacked, aggregation):
        net = SegmentationNet.create(_arch(aggregation=aggregation), seed=1)
        pred = net.predict(stacked)
        assert pred.op_type.shape == (11,)
        assert set(pred.op_step.tolist()) <= {0, 1}

    def test_independent_has_two_backbones(self, box):
        net = SegmentationNet.create(_arch(joint=False, aggregation="none"), seed=0)
        names = net.params.names()
        assert any(n.startswith("backbone_step.") for n in names)
        assert any(n.startswith("backbone_type.") for n in names)
        assert not any(n.startswith("backbone.") for n in names)
        assert net.predict(box).n_faces == 6

    def test_permutation_equivariance(self, stacked):
        net = SegmentationNet.create(_arch(), seed=3)
        rng = np.random.default_rng(0)
        fp = rng.permutation(stacked.n_faces)
        ep = rng.permutation(stacked.n_edges)
        cp = rng.permutation(stacked.n_coedges)
        base = net.forward(prepare_inputs(stacked, 2))
        moved = net.forward(prepare_inputs(permute_ids(stacked, fp, ep, cp), 2))
        np.testing.assert_allclose(moved.step_probs.value[fp], base.step_probs.value, atol=1e-10)
        np.testing.assert_allclose(moved.type_probs.value[fp], base.type_probs.value, atol=1e-10)

    def test_feature_width_mismatch(self, box):
        net = SegmentationNet.create(_arch(), seed=0)
        with pytest.raises(ShapeError):
            net.forward(prepare_inputs(box, 3))

    def test_too_many_steps_for_k_s(self, stacked):
        net = SegmentationNet.create(_arch(k_s=1), seed=0)
        with pytest.raises(ShapeError, match="exceed"):
            net.loss(prepare_inputs(stacked, 2))


class TestPersistence:
    def test_save_load_predicts_identically(self, tmp_path, stacked):
        net = SegmentationNet.create(_arch(), seed=5)
        path = tmp_path / "checkpoint.json"
        net.save(path, {"tool_version": "test"})
        loaded = SegmentationNet.load(path)
        assert loaded.arch == net.arch
        assert loaded.params.equal(net.params)
        a, b = net.predict(stacked), loaded.predict(stacked)
        assert np.array_equal(a.step_probs, b.step_probs)
        assert np.array_equal(a.type_probs, b.type_probs)

    def test_unreadable_arch(self, tmp_path):
        path = tmp_path / "checkpoint.json"
        SegmentationNet.create(_arch(), seed=0).save(path)
        doc = json.loads(path.read_text(encoding="utf-8"))
        doc["arch_config"]["aggregation"] = "median"
        path.write_text(json.dumps(doc), encoding="utf-8")
        with pytest.raises(VersionError):
            SegmentationNet.load(path)

    def test_params_must_match_arch(self):
        other = SegmentationNet.create(_arch(hidden=5), seed=0)
        with pytest.raises(ShapeError):
            SegmentationNet(_arch(), other.params)


class TestGradients:
    @pytest.mark.parametrize("aggregation", ["avg", "max", "soft_labels"])
    def test_matches_finite_differences(self, stacked, aggregation):
        net = SegmentationNet.create(_arch(aggregation=aggregation), seed=2)
        inputs = prepare_inputs(stacked, 2)
        terms = net.loss(inputs)
        grads = backward(terms.total, net.params)

        def value() -> float:
            out = net.loss(inputs, assignment=terms.assignment, membership=terms.membership)
            return float(out.total.value)

        rng = np.random.default_rng(0)
        eps = 1e-6
        for name in ("step_head.W", "type_head.W", "backbone.in_face.W", "backbone.layer0.coedge.W"):
            p = net.params[name]
            for _ in range(4):
                idx = tuple(int(rng.integers(0, s)) for s in p.shape)
                original = p.value[idx]
                p.value[idx] = original + eps
                plus = value()
                p.value[idx] = original - eps
                minus = value()
                p.value[idx] = original
                numeric = (plus - minus) / (2 * eps)
                assert abs(grads[name][idx] - numeric) <= 1e-5 + 1e-4 * abs(numeric), (name, idx)

    @pytest.mark.acceptance
    @pytest.mark.parametrize(
        ("joint", "aggregation"),
        [(True, "avg"), (True, "max"), (True, "sum_softmax"), (True, "soft_labels"), (True, "none"), (False, "none")],
    )
    def test_every_parameter_on_generated_models(self, joint, aggregation):
        params = GenParams(steps_min=2, steps_max=3)
        rng = np.random.default_rng(1)
        eps = 1e-6
        for i in range(25):
            model = generate_model(derive_seed(17, i), params)
            net = SegmentationNet.create(_arch(joint=joint, aggregation=aggregation, k_s=3), seed=i)
            inputs = prepare_inputs(model, 2)
            terms = net.loss(inputs)
            grads = backward(terms.total, net.params)

            def value(net=net, inputs=inputs, terms=terms) -> float:
                out = net.loss(inputs, assignment=terms.assignment, membership=terms.membership)
                return float(out.total.value)

            for name in net.params.names():
                p = net.params[name]
                for _ in range(2):
                    idx = tuple(int(rng.integers(0, s)) for s in p.shape)
                    original = p.value[idx]
                    p.value[idx] = original + eps
                    plus = value()
                    p.value[idx] = original - eps
                    minus = value()
                    p.value[idx] = original
                    numeric = (plus - minus) / (2 * eps)
                    assert abs(grads[name][idx] - numeric) <= 1e-6 + 1e-4 * abs(numeric), (i, name, idx)
