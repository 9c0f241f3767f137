from __future__ import annotations

import math
from collections.abc import Iterator, Mapping

import numpy as np

from src.errors import ShapeError
from src.nn.autograd import Param


class ModelParams:
    """Ordered, uniquely named collection of :class:`Param`."""

    def __init__(self) -> None:
        self._params: dict[str, Param] = {}

    def add(self, name: str, value: np.ndarray) -> Param:
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        p = Param(name, value)
        self._params[name] = p
        return p

    def __getitem__(self, name: str) -> Param:
        return self._params[name]

    def __contains__(self, name: object) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[Param]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def shapes(self) -> dict[str, tuple[int, ...]]:
        return {name: p.shape for name, p in self._params.items()}

    def copy(self) -> ModelParams:
        out = ModelParams()
        for p in self:
            out.add(p.name, p.value.copy())
        return out

    def assign(self, values: Mapping[str, np.ndarray]) -> None:
        """Overwrite values in place; names and shapes must match exactly."""
        if set(values) != set(self._params):
            raise ShapeError(f"parameter names differ: {sorted(set(values) ^ set(self._params))}")
        for name, value in values.items():
            arr = np.asarray(value, dtype=np.float64)
            if arr.shape != self._params[name].shape:
                raise ShapeError(f"{name}: expected shape {self._params[name].shape}, got {arr.shape}")
            self._params[name].value = arr.copy()

    def add_affine(self, prefix: str, fan_in: int, fan_out: int, rng: np.random.Generator) -> None:
        """Glorot-uniform weights ``(fan_in, fan_out)`` and zero bias."""
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        self.add(f"{prefix}.W", rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        self.add(f"{prefix}.b", np.zeros(fan_out))

    def equal(self, other: ModelParams) -> bool:
        """Bitwise equality of names, shapes and values."""
        if self.names() != other.names():
            return False
        return all(np.array_equal(p.value, other[p.name].value) for p in self)
