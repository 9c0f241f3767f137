from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from src.errors import ShapeError
from src.nn.params import ModelParams


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: ModelParams,
    grads: Mapping[str, np.ndarray],
    state: AdamState,
) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update, in place on *params* and *state*.

    Parameters missing from *grads* are treated as having zero gradient.

    Raises:
        ShapeError: If a gradient's shape differs from its parameter's.
    """
    for name, g in grads.items():
        if name not in params:
            raise ShapeError(f"gradient for unknown parameter {name!r}")
        if np.shape(g) != params[name].shape:
            raise ShapeError(f"{name}: gradient shape {np.shape(g)} != parameter shape {params[name].shape}")

    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for p in params:
        g = grads.get(p.name)
        if g is None:
            g = np.zeros_like(p.value)
        m = state.m.get(p.name, np.zeros_like(p.value))
        v = state.v.get(p.name, np.zeros_like(p.value))
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        state.m[p.name], state.v[p.name] = m, v
        p.value = p.value - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        p.grad = np.asarray(g, dtype=np.float64)
    return params, state
