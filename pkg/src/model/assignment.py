"""Minimum-cost one-to-one assignment (Hungarian method with potentials)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from src.errors import ShapeError


@dataclass(frozen=True)
class Assignment:
    """Row ``rows[i]`` is matched to column ``cols[i]``."""

    rows: tuple[int, ...]
    cols: tuple[int, ...]
    total_cost: float

    @property
    def mapping(self) -> dict[int, int]:
        return dict(zip(self.rows, self.cols, strict=True))


def _solve(cost: np.ndarray) -> list[int]:
    """Optimal column for each row of an ``n x m`` matrix, ``n <= m``; O(n^2 m)."""
    n, m = cost.shape
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    owner = [0] * (m + 1)  # owner[j]: row (1-based) holding column j, 0 if free
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        owner[0] = i
        j0 = 0
        minv = [math.inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = owner[j0]
            row = cost[i0 - 1]
            delta = math.inf
            j1 = 0
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[owner[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
    result = [0] * n
    for j in range(1, m + 1):
        if owner[j]:
            result[owner[j] - 1] = j - 1
    return result


def _cost_of(cost: np.ndarray, cols: list[int]) -> float:
    total = 0.0
    for i, j in enumerate(cols):
        total += float(cost[i, j])
    return total


def hungarian(cost: np.ndarray) -> Assignment:
    """Optimal injective row -> column map; ties resolve to the lexicographically smallest map.

    Raises:
        ShapeError: If the matrix is not 2-D or has more rows than columns.
        ValueError: On non-finite entries.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2:
        raise ShapeError(f"cost matrix must be 2-D, got shape {cost.shape}")
    n, m = cost.shape
    if n > m:
        raise ShapeError(f"cannot assign {n} rows injectively to {m} columns")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix has non-finite entries")
    if n == 0:
        return Assignment(rows=(), cols=(), total_cost=0.0)

    best = _cost_of(cost, _solve(cost))
    tol = 1e-12 * max(1.0, abs(best))

    # Fix rows in order, each to the smallest column that keeps the optimum reachable.
    chosen: list[int] = []
    prefix = 0.0
    for i in range(n):
        for j in range(m):
            if j in chosen:
                continue
            total = prefix + float(cost[i, j])
            if i + 1 < n:
                free = [c for c in range(m) if c not in chosen and c != j]
                sub = cost[i + 1 :][:, free]
                total += _cost_of(sub, _solve(sub))
            if total <= best + tol:
                chosen.append(j)
                prefix += float(cost[i, j])
                break
        else:  # pragma: no cover - the optimum is always reachable
            raise RuntimeError("assignment refinement lost the optimum")

    return Assignment(rows=tuple(range(n)), cols=tuple(chosen), total_cost=_cost_of(cost, chosen))
