"""Reverse-mode differentiation over dense float64 arrays.

Every op returns a :class:`Tensor` that remembers its parents and a closure
mapping the output gradient to parent gradients. :func:`backward` walks the
recorded graph once in reverse topological order and returns gradients keyed
by parameter name; nothing is written into shared state, so independent
graphs may be differentiated concurrently.

Selection ops (max pooling, gathers driven by argmax membership) route the
gradient to the selected entries only. Ties in max pooling go to the lowest
row index.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from src.errors import DegenerateInput, GraphError, ShapeError

EPS_LOG = 1e-12

BackwardFn = Callable[[np.ndarray], tuple[np.ndarray | None, ...]]


@dataclass
class Param:
    """A named trainable array; ``grad`` holds the last reduced gradient."""

    name: str
    value: np.ndarray
    grad: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.value = np.asarray(self.value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape


class Tensor:
    __slots__ = ("backward_fn", "op", "param", "parents", "requires_grad", "value")

    def __init__(
        self,
        value: np.ndarray,
        parents: tuple[Tensor, ...] = (),
        backward_fn: BackwardFn | None = None,
        *,
        op: str = "const",
        param: Param | None = None,
    ) -> None:
        self.value = value
        self.parents = parents
        self.backward_fn = backward_fn
        self.op = op
        self.param = param
        self.requires_grad = param is not None or any(p.requires_grad for p in parents)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Tensor(op={self.op}, shape={self.shape})"


def constant(value: np.ndarray | float) -> Tensor:
    return Tensor(np.asarray(value, dtype=np.float64))


def param(p: Param) -> Tensor:
    return Tensor(p.value, op="param", param=p)


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ShapeError(message)


def _node(value: np.ndarray, parents: tuple[Tensor, ...], fn: BackwardFn, op: str) -> Tensor:
    return Tensor(value, parents, fn, op=op)


# ---------------------------------------------------------------------------
# Dense ops
# ---------------------------------------------------------------------------


def affine(X: Tensor, W: Tensor, b: Tensor) -> Tensor:
    """``X @ W + b`` for ``X`` (B, m), ``W`` (m, n), ``b`` (n,)."""
    _require(X.value.ndim == 2 and W.value.ndim == 2 and b.value.ndim == 1, "affine expects 2-D X, W and 1-D b")
    _require(X.shape[1] == W.shape[0], f"affine: X has {X.shape[1]} columns, W has {W.shape[0]} rows")
    _require(W.shape[1] == b.shape[0], f"affine: W has {W.shape[1]} columns, b has {b.shape[0]} entries")
    x, w = X.value, W.value

    def fn(g: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return g @ w.T, x.T @ g, g.sum(axis=0)

    return _node(x @ w + b.value, (X, W, b), fn, "affine")


def relu(X: Tensor) -> Tensor:
    mask = X.value > 0.0

    def fn(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * mask,)

    return _node(np.where(mask, X.value, 0.0), (X,), fn, "relu")


def softmax_rows(X: Tensor) -> Tensor:
    _require(X.value.ndim == 2, "softmax_rows expects a 2-D input")
    z = X.value - X.value.max(axis=1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=1, keepdims=True)

    def fn(g: np.ndarray) -> tuple[np.ndarray]:
        return (y * (g - np.sum(g * y, axis=1, keepdims=True)),)

    return _node(y, (X,), fn, "softmax")


def cross_entropy_rows(P: Tensor, T: np.ndarray) -> Tensor:
    """Per-row ``-sum_i t_i log(max(p_i, 1e-12))`` against constant targets *T*."""
    _require(P.shape == T.shape, f"cross_entropy: prediction {P.shape} vs target {T.shape}")
    p = P.value
    clipped = np.maximum(p, EPS_LOG)

    def fn(g: np.ndarray) -> tuple[np.ndarray]:
        return (np.where(p > EPS_LOG, -T / clipped, 0.0) * g[:, None],)

    return _node(-np.sum(T * np.log(clipped), axis=1), (P,), fn, "cross_entropy")


def concat_cols(parts: Sequence[Tensor]) -> Tensor:
    _require(len(parts) > 0, "concat needs at least one input")
    rows = parts[0].shape[0]
    _require(all(t.value.ndim == 2 and t.shape[0] == rows for t in parts), "concat: row counts differ")
    bounds = np.cumsum([0] + [t.shape[1] for t in parts])

    def fn(g: np.ndarray) -> tuple[np.ndarray, ...]:
        return tuple(g[:, bounds[i] : bounds[i + 1]] for i in range(len(parts)))

    return _node(np.concatenate([t.value for t in parts], axis=1), tuple(parts), fn, "concat")


def gather_rows(X: Tensor, index: np.ndarray) -> Tensor:
    index = np.asarray(index, dtype=np.int64)
    _require(index.ndim == 1, "gather index must be 1-D")
    _require(index.size == 0 or (index.min() >= 0 and index.max() < X.shape[0]), "gather index out of range")
    n_rows = X.shape[0]

    def fn(g: np.ndarray) -> tuple[np.ndarray]:
        out = np.zeros((n_rows,) + g.shape[1:])
        np.add.at(out, index, g)
        return (out,)

    return _node(X.value[index], (X,), fn, "gather")


def add(a: Tensor, b: Tensor) -> Tensor:
    _require(a.shape == b.shape, f"add: shapes {a.shape} and {b.shape} differ")

    def fn(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return g, g

    return _node(a.value + b.value, (a, b), fn, "add")


def mul(a: Tensor, b: Tensor) -> Tensor:
    _require(a.shape == b.shape, f"mul: shapes {a.shape} and {b.shape} differ")
    av, bv = a.value, b.value

    def fn(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return g * bv, g * av

    return _node(av * bv, (a, b), fn, "mul")


def scale(a: Tensor, c: float) -> Tensor:
    def fn(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * c,)

    return _node(a.value * c, (a,), fn, "scale")


def shift(a: Tensor, c: float) -> Tensor:
    def fn(g: np.ndarray) -> tuple[np.ndarray]:
        return (g,)

    return _node(a.value + c, (a,), fn, "shift")


def mean(a: Tensor) -> Tensor:
    n = a.value.size
    _require(n > 0, "mean of an empty tensor")
    shape = a.shape

    def fn(g: np.ndarray) -> tuple[np.ndarray]:
        return (np.full(shape, float(g) / n),)

    return _node(np.asarray(a.value.mean()), (a,), fn, "mean")


def dropout(a: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout with a mask drawn from *rng*; identity at rate 0."""
    if rate <= 0.0:
        return a
    mask = (rng.random(a.shape) >= rate) / (1.0 - rate)

    def fn(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * mask,)

    return _node(a.value * mask, (a,), fn, "dropout")


# ---------------------------------------------------------------------------
# Segment (pooling) ops
# ---------------------------------------------------------------------------


def _segments(segment: np.ndarray, n_segments: int, n_rows: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    segment = np.asarray(segment, dtype=np.int64)
    _require(segment.shape == (n_rows,), f"segment ids must have shape ({n_rows},)")
    _require(n_rows == 0 or (segment.min() >= 0 and segment.max() < n_segments), "segment id out of range")
    counts = np.bincount(segment, minlength=n_segments)
    _require(bool(np.all(counts > 0)), f"empty segment(s): {np.flatnonzero(counts == 0).tolist()}")
    order = np.argsort(segment, kind="stable")
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    return segment, order, starts


def segment_max(X: Tensor, segment: np.ndarray, n_segments: int) -> Tensor:
    """Column-wise max over the rows of each segment; every segment must be nonempty."""
    _require(X.value.ndim == 2, "segment_max expects a 2-D input")
    n_rows, width = X.shape
    seg, order, starts = _segments(segment, n_segments, n_rows)
    xs = X.value[order]
    out = np.maximum.reduceat(xs, starts, axis=0)
    positions = np.where(xs == out[seg[order]], np.arange(n_rows)[:, None], n_rows)
    winners = order[np.minimum.reduceat(positions, starts, axis=0)]
    cols = np.arange(width)[None, :]

    def fn(g: np.ndarray) -> tuple[np.ndarray]:
        grad = np.zeros((n_rows, width))
        np.add.at(grad, (winners, cols), g)
        return (grad,)

    return _node(out, (X,), fn, "segment_max")


def segment_sum(X: Tensor, segment: np.ndarray, n_segments: int) -> Tensor:
    _require(X.value.ndim == 2, "segment_sum expects a 2-D input")
    seg, _, _ = _segments(segment, n_segments, X.shape[0])
    out = np.zeros((n_segments, X.shape[1]))
    np.add.at(out, seg, X.value)

    def fn(g: np.ndarray) -> tuple[np.ndarray]:
        return (g[seg],)

    return _node(out, (X,), fn, "segment_sum")


def segment_mean(X: Tensor, segment: np.ndarray, n_segments: int) -> Tensor:
    seg = np.asarray(segment, dtype=np.int64)
    counts = np.bincount(seg, minlength=n_segments).astype(np.float64)
    summed = segment_sum(X, seg, n_segments)
    inv = 1.0 / counts[:, None]

    def fn(g: np.ndarray) -> tuple[np.ndarray]:
        return (g * inv,)

    return _node(summed.value * inv, (summed,), fn, "segment_mean")


# ---------------------------------------------------------------------------
# Relaxed IoU
# ---------------------------------------------------------------------------


def riou_rows(S: np.ndarray, P: Tensor) -> Tensor:
    """Row-wise ``s.p / (|s|_1 + |p|_1 - s.p)`` with constant *S*.

    Raises:
        DegenerateInput: If a row's denominator is not positive.
    """
    _require(S.shape == P.shape, f"riou: {S.shape} vs {P.shape}")
    p = P.value
    inter = np.sum(S * p, axis=1)
    denom = np.abs(S).sum(axis=1) + np.abs(p).sum(axis=1) - inter
    if np.any(denom <= 0.0):
        raise DegenerateInput(f"riou denominator is zero for rows {np.flatnonzero(denom <= 0.0).tolist()}")

    def fn(g: np.ndarray) -> tuple[np.ndarray]:
        d = denom[:, None]
        grad = (S * d - inter[:, None] * (np.sign(p) - S)) / (d * d)
        return (grad * g[:, None],)

    return _node(inter / denom, (P,), fn, "riou")


# ---------------------------------------------------------------------------
# Backward pass
# ---------------------------------------------------------------------------


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    state: dict[int, int] = {}  # 1 = on stack, 2 = done
    stack: list[tuple[Tensor, int]] = [(root, 0)]
    while stack:
        node, i = stack.pop()
        key = id(node)
        if i == 0:
            if state.get(key) == 2:
                continue
            if state.get(key) == 1:
                raise GraphError(f"cycle through {node!r}")
            state[key] = 1
        if i < len(node.parents):
            stack.append((node, i + 1))
            parent = node.parents[i]
            if not isinstance(parent, Tensor):
                raise GraphError(f"{node.op} has a non-tensor input {type(parent).__name__}")
            if parent.requires_grad:
                if state.get(id(parent)) == 1:
                    raise GraphError(f"cycle through {parent!r}")
                if state.get(id(parent)) != 2:
                    stack.append((parent, 0))
        else:
            state[key] = 2
            order.append(node)
    return order


def backward(loss: Tensor, params: Iterable[Param] = ()) -> dict[str, np.ndarray]:
    """Gradients of the scalar *loss* for every parameter reached, plus zeros for *params* not reached.

    Raises:
        GraphError: Non-tensor or non-scalar loss, cycles, or a node without a backward rule.
    """
    if not isinstance(loss, Tensor):
        raise GraphError(f"loss must be a Tensor, got {type(loss).__name__}")
    if loss.value.size != 1:
        raise GraphError(f"loss must be scalar, got shape {loss.shape}")

    out: dict[str, np.ndarray] = {p.name: np.zeros_like(p.value) for p in params}
    if not loss.requires_grad:
        return out

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.value)}
    for node in reversed(_topological_order(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.param is not None:
            name = node.param.name
            out[name] = out[name] + g if name in out else g.copy()
            continue
        if node.backward_fn is None:
            raise GraphError(f"op {node.op!r} has no backward rule")
        for parent, pg in zip(node.parents, node.backward_fn(g), strict=True):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = grads[key] + pg if key in grads else pg
    return out


def cross_entropy_row(p: np.ndarray, t: np.ndarray) -> float:
    """Cross-entropy of one probability row against a one-hot target."""
    p, t = np.asarray(p, dtype=np.float64), np.asarray(t, dtype=np.float64)
    _require(p.shape == t.shape and p.ndim == 1, f"cross_entropy_row: {p.shape} vs {t.shape}")
    return float(-np.sum(t * np.log(np.maximum(p, EPS_LOG))))
