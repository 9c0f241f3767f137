from __future__ import annotations

import itertools

import numpy as np
import pytest

from src.errors import DegenerateInput, ShapeError
from src.model.heads import (
    aggregate_step_embeddings,
    align_steps,
    one_hot,
    riou,
    step_loss,
    step_membership,
    total_loss,
    type_input_width,
    type_loss,
)
from src.nn import autograd as ag


def _softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


class TestRiou:
    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_equals_set_iou_on_binary_vectors(self, k):
        vectors = [np.array(bits, dtype=float) for bits in itertools.product([0, 1], repeat=k) if any(bits)]
        for a, b in itertools.product(vectors, repeat=2):
            inter = np.sum(a * b)
            union = np.sum(np.maximum(a, b))
            assert riou(a, b) == pytest.approx(inter / union, abs=1e-12)

    def test_randomized_binary(self):
        rng = np.random.default_rng(0)
        for _ in range(2000):
            k = int(rng.integers(5, 11))
            a = rng.integers(0, 2, k).astype(float)
            b = rng.integers(0, 2, k).astype(float)
            a[0] = 1.0
            assert riou(a, b) == pytest.approx(np.sum(a * b) / np.sum(np.maximum(a, b)), abs=1e-12)

    @pytest.mark.acceptance
    def test_hundred_thousand_binary_pairs(self):
        rng = np.random.default_rng(10)
        checked = 0
        while checked < 100_000:
            k = int(rng.integers(5, 11))
            a = rng.integers(0, 2, k).astype(float)
            b = rng.integers(0, 2, k).astype(float)
            if not a.any() or not b.any():
                continue
            assert abs(riou(a, b) - np.sum(a * b) / np.sum(np.maximum(a, b))) <= 1e-12
            checked += 1

    def test_degenerate(self):
        with pytest.raises(DegenerateInput):
            riou(np.zeros(3), np.zeros(3))


class TestStepLoss:
    def test_perfect_prediction_is_zero(self):
        S = one_hot(np.array([0, 0, 1, 2]), 3)
        loss, _ = step_loss(S, ag.constant(S[:, [2, 0, 1]]))
        assert float(loss.value) == pytest.approx(0.0)

    def test_invariant_under_permutations(self):
        rng = np.random.default_rng(4)
        for _ in range(1000):
            n, k, k_s = 7, 3, 4
            labels = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
            S = one_hot(labels, k)
            S_hat = _softmax(rng.normal(size=(n, k_s)))
            base = float(step_loss(S, ag.constant(S_hat))[0].value)
            gt_perm = rng.permutation(k)
            col_perm = rng.permutation(k_s)
            assert float(step_loss(S[:, gt_perm], ag.constant(S_hat))[0].value) == pytest.approx(base, abs=1e-12)
            assert float(step_loss(S, ag.constant(S_hat[:, col_perm]))[0].value) == pytest.approx(base, abs=1e-12)

    def test_fixed_assignment_is_reused(self):
        S = one_hot(np.array([0, 1]), 2)
        S_hat = ag.constant(np.array([[0.9, 0.1], [0.2, 0.8]]))
        _, assignment = step_loss(S, S_hat)
        _, again = step_loss(S, S_hat, assignment)
        assert again is assignment

    def test_too_few_columns(self):
        with pytest.raises(ShapeError):
            step_loss(one_hot(np.array([0, 1, 2]), 3), ag.constant(np.full((3, 2), 0.5)))

    def test_padded_gt_columns_excluded(self):
        S = np.zeros((3, 3))
        S[:, 0] = 1.0
        assignment = align_steps(S, np.eye(3))
        assert assignment.rows == (0,)


class TestAggregation:
    def test_membership_is_compacted(self):
        probs = np.array([[0.1, 0.2, 0.7], [0.1, 0.2, 0.7], [0.8, 0.1, 0.1]])
        segment, n = step_membership(probs)
        assert segment.tolist() == [1, 1, 0]
        assert n == 2

    def test_avg(self):
        emb = ag.constant(np.array([[1.0, 0.0], [3.0, 2.0], [5.0, 5.0]]))
        probs = ag.constant(np.array([[0.9, 0.1], [0.8, 0.2], [0.1, 0.9]]))
        out = aggregate_step_embeddings(emb, probs, "avg")
        assert out.value.tolist() == [[2.0, 1.0], [2.0, 1.0], [5.0, 5.0]]

    def test_max(self):
        emb = ag.constant(np.array([[1.0, 4.0], [3.0, 2.0]]))
        probs = ag.constant(np.array([[0.9, 0.1], [0.8, 0.2]]))
        out = aggregate_step_embeddings(emb, probs, "max")
        assert out.value.tolist() == [[3.0, 4.0], [3.0, 4.0]]

    def test_sum_softmax_rows_are_distributions(self):
        emb = ag.constant(np.array([[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]]))
        probs = ag.constant(np.array([[0.9, 0.1], [0.8, 0.2], [0.1, 0.9]]))
        out = aggregate_step_embeddings(emb, probs, "sum_softmax")
        np.testing.assert_allclose(out.value.sum(axis=1), 1.0)
        np.testing.assert_allclose(out.value[0], out.value[1])

    def test_soft_labels_and_none(self):
        emb = ag.constant(np.ones((2, 3)))
        probs = ag.constant(np.array([[0.6, 0.4], [0.3, 0.7]]))
        assert aggregate_step_embeddings(emb, probs, "soft_labels") is probs
        assert aggregate_step_embeddings(emb, probs, "none") is None

    def test_type_input_width(self):
        assert type_input_width(64, 4, "avg") == 128
        assert type_input_width(64, 4, "soft_labels") == 68
        assert type_input_width(64, 4, "none") == 64


class TestLosses:
    def test_type_loss_is_mean_cross_entropy(self):
        T = one_hot(np.array([0, 1]), 2)
        P = ag.constant(np.array([[0.5, 0.5], [0.25, 0.75]]))
        expected = (np.log(2.0) - np.log(0.75)) / 2
        assert float(type_loss(T, P).value) == pytest.approx(expected)

    def test_total_loss_weights(self):
        a, b = ag.constant(np.array(0.5)), ag.constant(np.array(2.0))
        assert float(total_loss(a, b).value) == 2.5
        assert float(total_loss(a, b, (2.0, 0.5)).value) == 2.0

    def test_one_hot_range(self):
        with pytest.raises(ShapeError):
            one_hot(np.array([0, 3]), 3)
