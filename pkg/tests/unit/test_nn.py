from __future__ import annotations

import json
from collections.abc import Callable

import numpy as np
import pytest

from src.errors import DegenerateInput, GraphError, ShapeError, VersionError
from src.nn import autograd as ag
from src.nn.autograd import Param, backward
from src.nn.checkpoint import load_params, save_params
from src.nn.optim import AdamState, adam_step
from src.nn.params import ModelParams


def _weighted(out: ag.Tensor, weights: np.ndarray) -> ag.Tensor:
    return ag.mean(ag.mul(out, ag.constant(weights)))


def _gradcheck(build: Callable[[ag.Tensor], ag.Tensor], value: np.ndarray, eps: float = 1e-6) -> float:
    """Max error between backward() and central differences, relative to the largest gradient."""
    p = Param("x", value.copy())
    analytic = backward(build(ag.param(p)), [p])["x"]
    numeric = np.zeros_like(value)
    for idx in np.ndindex(value.shape):
        plus, minus = value.copy(), value.copy()
        plus[idx] += eps
        minus[idx] -= eps
        f_plus = float(build(ag.constant(plus)).value)
        f_minus = float(build(ag.constant(minus)).value)
        numeric[idx] = (f_plus - f_minus) / (2 * eps)
    scale = max(float(np.abs(analytic).max()), float(np.abs(numeric).max()), 1e-8)
    return float(np.max(np.abs(analytic - numeric)) / scale)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


class TestGradients:
    def test_affine(self, rng):
        W = rng.normal(size=(4, 3))
        b = rng.normal(size=3)
        R = rng.normal(size=(5, 3))
        err = _gradcheck(lambda x: _weighted(ag.affine(x, ag.constant(W), ag.constant(b)), R), rng.normal(size=(5, 4)))
        assert err < 1e-6

    def test_affine_weights(self, rng):
        X = rng.normal(size=(5, 4))
        R = rng.normal(size=(5, 3))
        err = _gradcheck(lambda w: _weighted(ag.affine(ag.constant(X), w, ag.constant(np.zeros(3))), R), rng.normal(size=(4, 3)))
        assert err < 1e-6

    def test_relu(self, rng):
        x = rng.normal(size=(4, 3))
        x[np.abs(x) < 0.1] = 0.5
        R = rng.normal(size=(4, 3))
        assert _gradcheck(lambda t: _weighted(ag.relu(t), R), x) < 1e-6

    def test_softmax(self, rng):
        R = rng.normal(size=(3, 4))
        assert _gradcheck(lambda t: _weighted(ag.softmax_rows(t), R), rng.normal(size=(3, 4))) < 1e-6

    def test_cross_entropy(self, rng):
        T = np.eye(4)[[0, 2, 3]]
        assert _gradcheck(lambda t: ag.mean(ag.cross_entropy_rows(ag.softmax_rows(t), T)), rng.normal(size=(3, 4))) < 1e-6

    def test_concat_and_gather(self, rng):
        other = ag.constant(rng.normal(size=(3, 2)))
        R = rng.normal(size=(5, 4))
        index = np.array([0, 2, 2, 1, 0])
        err = _gradcheck(lambda t: _weighted(ag.gather_rows(ag.concat_cols([t, other]), index), R), rng.normal(size=(3, 2)))
        assert err < 1e-6

    def test_segment_ops(self, rng):
        segment = np.array([0, 1, 0, 2, 1, 2])
        R = rng.normal(size=(3, 2))
        for op in (ag.segment_max, ag.segment_sum, ag.segment_mean):
            err = _gradcheck(lambda t, op=op: _weighted(op(t, segment, 3), R), rng.normal(size=(6, 2)))
            assert err < 1e-6, op.__name__

    def test_riou_rows(self, rng):
        S = np.eye(3)[[0, 1, 2, 1]]
        err = _gradcheck(lambda t: ag.mean(ag.riou_rows(S, ag.softmax_rows(t))), rng.normal(size=(4, 3)))
        assert err < 1e-6

    def test_scale_shift_add(self, rng):
        R = rng.normal(size=(2, 2))
        err = _gradcheck(lambda t: _weighted(ag.add(ag.shift(ag.scale(t, 3.0), 1.0), t), R), rng.normal(size=(2, 2)))
        assert err < 1e-6


class TestOps:
    def test_segment_max_tie_goes_to_lowest_row(self):
        p = Param("x", np.array([[1.0], [1.0], [0.0]]))
        out = ag.segment_max(ag.param(p), np.array([0, 0, 0]), 1)
        grads = backward(ag.mean(out), [p])
        assert grads["x"].ravel().tolist() == [1.0, 0.0, 0.0]

    def test_empty_segment_rejected(self):
        with pytest.raises(ShapeError, match="empty segment"):
            ag.segment_sum(ag.constant(np.ones((2, 1))), np.array([0, 0]), 2)

    def test_riou_degenerate(self):
        with pytest.raises(DegenerateInput):
            ag.riou_rows(np.zeros((1, 2)), ag.constant(np.zeros((1, 2))))

    def test_affine_shape_mismatch(self):
        with pytest.raises(ShapeError):
            ag.affine(ag.constant(np.ones((2, 3))), ag.constant(np.ones((2, 2))), ag.constant(np.ones(2)))

    def test_dropout_identity_at_zero(self):
        x = ag.constant(np.ones((2, 2)))
        assert ag.dropout(x, 0.0, np.random.default_rng(0)) is x

    def test_cross_entropy_row(self):
        assert ag.cross_entropy_row([0.5, 0.5], [1.0, 0.0]) == pytest.approx(np.log(2.0))


class TestBackward:
    def test_non_scalar_loss(self):
        p = Param("x", np.ones(3))
        with pytest.raises(GraphError, match="scalar"):
            backward(ag.param(p))

    def test_non_tensor_loss(self):
        with pytest.raises(GraphError):
            backward(1.0)  # type: ignore[arg-type]

    def test_unreached_params_get_zeros(self):
        used, unused = Param("a", np.ones(2)), Param("b", np.ones(3))
        grads = backward(ag.mean(ag.param(used)), [used, unused])
        assert grads["a"].tolist() == [0.5, 0.5]
        assert grads["b"].tolist() == [0.0, 0.0, 0.0]

    def test_shared_param_accumulates(self):
        p = Param("x", np.array([2.0]))
        t = ag.param(p)
        grads = backward(ag.mean(ag.mul(t, t)), [p])
        assert grads["x"].tolist() == [4.0]


class TestModelParams:
    def test_duplicate_name(self):
        params = ModelParams()
        params.add("w", np.zeros(2))
        with pytest.raises(ValueError, match="duplicate"):
            params.add("w", np.zeros(2))

    def test_add_affine_is_glorot(self):
        params = ModelParams()
        params.add_affine("layer", 10, 6, np.random.default_rng(0))
        assert params.shapes() == {"layer.W": (10, 6), "layer.b": (6,)}
        assert np.abs(params["layer.W"].value).max() <= np.sqrt(6.0 / 16.0)
        assert not params["layer.b"].value.any()

    def test_assign_checks_shapes(self):
        params = ModelParams()
        params.add("w", np.zeros(2))
        with pytest.raises(ShapeError):
            params.assign({"w": np.zeros(3)})

    def test_copy_is_independent(self):
        params = ModelParams()
        params.add("w", np.zeros(2))
        clone = params.copy()
        clone["w"].value[0] = 1.0
        assert not params.equal(clone)


class TestAdam:
    def test_first_step_moves_by_lr(self):
        params = ModelParams()
        params.add("w", np.array([1.0, -1.0]))
        adam_step(params, {"w": np.array([0.5, -2.0])}, AdamState(lr=0.1))
        np.testing.assert_allclose(params["w"].value, [0.9, -0.9], atol=1e-6)

    def test_missing_grad_is_zero(self):
        params = ModelParams()
        params.add("w", np.array([1.0]))
        state = AdamState()
        adam_step(params, {}, state)
        assert params["w"].value.tolist() == [1.0]
        assert state.t == 1

    def test_shape_mismatch(self):
        params = ModelParams()
        params.add("w", np.zeros(2))
        with pytest.raises(ShapeError):
            adam_step(params, {"w": np.zeros(3)}, AdamState())

    def test_minimizes_quadratic(self):
        params = ModelParams()
        params.add("w", np.array([3.0]))
        state = AdamState(lr=0.1)
        for _ in range(300):
            adam_step(params, {"w": 2.0 * params["w"].value}, state)
        assert abs(params["w"].value[0]) < 0.3


class TestCheckpoint:
    def _params(self) -> ModelParams:
        params = ModelParams()
        params.add_affine("head", 3, 2, np.random.default_rng(1))
        return params

    def test_round_trip_is_exact(self, tmp_path):
        params = self._params()
        path = tmp_path / "ckpt.json"
        save_params(path, params, {"k_s": 2}, {"tool_version": "x"})
        loaded, arch = load_params(path)
        assert loaded.equal(params)
        assert arch == {"k_s": 2}

    def test_unknown_version(self, tmp_path):
        path = tmp_path / "ckpt.json"
        save_params(path, self._params(), {})
        doc = json.loads(path.read_text(encoding="utf-8"))
        doc["format_version"] = "0"
        path.write_text(json.dumps(doc), encoding="utf-8")
        with pytest.raises(VersionError):
            load_params(path)

    def test_corrupted(self, tmp_path):
        path = tmp_path / "ckpt.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(VersionError):
            load_params(path)

    def test_expected_shapes(self, tmp_path):
        path = tmp_path / "ckpt.json"
        save_params(path, self._params(), {})
        with pytest.raises(ShapeError, match=r"head\.W"):
            load_params(path, {"head.W": (3, 3), "head.b": (2,)})
