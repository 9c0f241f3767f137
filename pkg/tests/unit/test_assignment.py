from __future__ import annotations

import itertools

import numpy as np
import pytest

from src.errors import ShapeError
from src.model.assignment import hungarian


def _brute_force(cost: np.ndarray) -> float:
    n, m = cost.shape
    return min(sum(cost[i, j] for i, j in enumerate(cols)) for cols in itertools.permutations(range(m), n))


class TestHungarian:
    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7])
    def test_matches_brute_force(self, n):
        rng = np.random.default_rng(n)
        perms = np.array(list(itertools.permutations(range(n))))
        rows = np.arange(n)
        for _ in range(1000):
            cost = rng.random((n, n))
            totals = cost[rows, perms].sum(axis=1)
            chosen = totals[np.all(perms == np.array(hungarian(cost).cols), axis=1)]
            assert chosen.size == 1
            assert chosen[0] == totals.min()

    def test_rectangular(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            cost = rng.random((3, 5))
            result = hungarian(cost)
            assert len(set(result.cols)) == 3
            assert result.total_cost == pytest.approx(_brute_force(cost), abs=1e-12)

    def test_integer_costs_with_ties(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            cost = rng.integers(0, 3, size=(4, 4)).astype(float)
            assert hungarian(cost).total_cost == _brute_force(cost)

    def test_ties_resolve_lexicographically(self):
        assert hungarian(np.zeros((3, 3))).cols == (0, 1, 2)
        assert hungarian(np.ones((2, 4))).cols == (0, 1)

    def test_known_answer(self):
        cost = np.array([[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]])
        result = hungarian(cost)
        assert result.cols == (1, 0, 2)
        assert result.total_cost == 5.0
        assert result.mapping == {0: 1, 1: 0, 2: 2}

    def test_empty(self):
        assert hungarian(np.zeros((0, 3))).cols == ()

    def test_more_rows_than_columns(self):
        with pytest.raises(ShapeError):
            hungarian(np.zeros((3, 2)))

    def test_non_finite(self):
        with pytest.raises(ValueError):
            hungarian(np.array([[0.0, np.inf], [1.0, 0.0]]))
