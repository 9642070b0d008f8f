"""Dense-matrix reverse-mode autodiff on a tape.

Every value is a 2-D float64 array wrapped in a :class:`Node`. Operations are
methods of :class:`Tape`; each one computes its forward value eagerly and, if
any input needs a gradient, appends a backward closure to the tape.
``Tape.backward`` replays those closures in reverse order, accumulating
gradients additively, so a node consumed twice gets the sum of both branches.

A tape created with ``exact=True`` swaps in kernels whose per-row results do
not depend on row position (``einsum`` products, neighbor sums taken in a
content-defined order). Node permutations then commute with the forward pass
bit for bit, which BLAS ``gemm`` does not guarantee.

Example::

    tape = Tape()
    w = tape.leaf(np.ones((3, 1)))
    x = tape.const(np.arange(6.0).reshape(2, 3))
    loss = tape.sum_all(tape.activate(tape.matmul(x, w), "tanh"))
    tape.backward(loss)
    w.grad  # d loss / d w
"""

from __future__ import annotations

from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DataError, NumericError, ShapeError

__all__ = ["Node", "Tape", "as_matrix", "grad_check"]

ACTIVATIONS = ("relu", "sigmoid", "tanh")


def as_matrix(value) -> np.ndarray:
    """Coerce to a 2-D float64 array. Vectors become single rows."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ShapeError(f"expected a matrix, got array of shape {arr.shape}")
    return arr


def _check_finite(value: np.ndarray, op: str) -> None:
    # NaN/inf anywhere propagate into the sum; an overflowing sum of finite
    # entries is treated as a numeric failure too
    if not np.isfinite(value.sum()):
        raise NumericError(f"non-finite values produced by {op}")


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Node:
    """A matrix value on a tape, with an optional accumulated gradient."""

    __slots__ = ("value", "grad", "requires_grad")

    def __init__(self, value: np.ndarray, requires_grad: bool = False):
        self.value = value
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Node(shape={self.value.shape}, requires_grad={self.requires_grad})"


class Tape:
    def __init__(self, exact: bool = False):
        self.exact = exact
        self._ops: list[tuple[Node, Callable[[np.ndarray], None]]] = []

    def __len__(self) -> int:
        return len(self._ops)

    # -- leaves -----------------------------------------------------------

    def leaf(self, value, requires_grad: bool = True) -> Node:
        arr = as_matrix(value)
        _check_finite(arr, "leaf")
        return Node(arr, requires_grad)

    def const(self, value) -> Node:
        return self.leaf(value, requires_grad=False)

    # -- plumbing ---------------------------------------------------------

    def _emit(self, value: np.ndarray, parents: Sequence[Node], backward, op: str) -> Node:
        _check_finite(value, op)
        out = Node(value, any(p.requires_grad for p in parents))
        if out.requires_grad:
            self._ops.append((out, backward))
        return out

    @staticmethod
    def _acc(node: Node, grad: np.ndarray) -> None:
        if not node.requires_grad:
            return
        node.grad = grad if node.grad is None else node.grad + grad

    def backward(self, loss: Node) -> None:
        """Fill ``.grad`` of every node that leads to ``loss``. The tape is
        consumed: a second call on the same tape propagates nothing."""
        if loss.shape != (1, 1):
            raise ShapeError(f"backward needs a scalar (1, 1) loss, got {loss.shape}")
        loss.grad = np.ones((1, 1))
        for out, fn in reversed(self._ops):
            if out.grad is not None:
                fn(out.grad)
        # closures reference the tape; dropping them breaks the cycle so
        # intermediate arrays are freed without waiting for the cyclic GC
        self._ops.clear()

    def _dot(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.exact:
            return np.einsum("ij,jk->ik", a, b, optimize=False)
        return a @ b

    # -- linear algebra ---------------------------------------------------

    def matmul(self, a: Node, b: Node) -> Node:
        if a.shape[1] != b.shape[0]:
            raise ShapeError(f"matmul: inner dimensions differ, {a.shape} vs {b.shape}")

        def back(g):
            if a.requires_grad:
                self._acc(a, g @ b.value.T)
            if b.requires_grad:
                self._acc(b, a.value.T @ g)

        return self._emit(self._dot(a.value, b.value), (a, b), back, "matmul")

    def affine(self, x: Node, w: Node, b: Node) -> Node:
        """``x @ w + b`` with ``b`` a (1, m) row broadcast over rows."""
        if x.shape[1] != w.shape[0]:
            raise ShapeError(f"affine: X {x.shape} does not chain with W {w.shape}")
        if b.shape != (1, w.shape[1]):
            raise ShapeError(f"affine: bias {b.shape} does not match W {w.shape}")

        def back(g):
            if x.requires_grad:
                self._acc(x, g @ w.value.T)
            if w.requires_grad:
                self._acc(w, x.value.T @ g)
            self._acc(b, g.sum(axis=0, keepdims=True))

        return self._emit(self._dot(x.value, w.value) + b.value, (x, w, b), back, "affine")

    def neighbor_sum(self, x: Node, adjacency: sp.csr_matrix) -> Node:
        """Row v of the result is the sum of rows u with ``adjacency[v, u] = 1``."""
        n = adjacency.shape[0]
        if x.shape[0] != n or adjacency.shape[1] != n:
            raise ShapeError(f"neighbor_sum: {x.shape} rows vs adjacency {adjacency.shape}")
        if self.exact:
            value = _ordered_neighbor_sum(x.value, adjacency.indptr, adjacency.indices)
        else:
            value = np.asarray(adjacency @ x.value)

        def back(g):
            self._acc(x, np.asarray(adjacency.T @ g))

        return self._emit(value, (x,), back, "neighbor_sum")

    def row_scale(self, x: Node, factors: np.ndarray) -> Node:
        """Multiply row i by the constant ``factors[i]``."""
        f = np.asarray(factors, dtype=np.float64).reshape(-1, 1)
        if f.shape[0] != x.shape[0]:
            raise ShapeError(f"row_scale: {f.shape[0]} factors for {x.shape} rows")
        return self._emit(x.value * f, (x,), lambda g: self._acc(x, g * f), "row_scale")

    # -- elementwise ------------------------------------------------------

    def _broadcast_shape(self, a: Node, b: Node, op: str) -> None:
        try:
            np.broadcast_shapes(a.shape, b.shape)
        except ValueError:
            raise ShapeError(f"{op}: cannot broadcast {a.shape} with {b.shape}") from None

    def add(self, a: Node, b: Node) -> Node:
        self._broadcast_shape(a, b, "add")

        def back(g):
            self._acc(a, _unbroadcast(g, a.shape))
            self._acc(b, _unbroadcast(g, b.shape))

        return self._emit(a.value + b.value, (a, b), back, "add")

    def sub(self, a: Node, b: Node) -> Node:
        self._broadcast_shape(a, b, "sub")

        def back(g):
            self._acc(a, _unbroadcast(g, a.shape))
            self._acc(b, -_unbroadcast(g, b.shape))

        return self._emit(a.value - b.value, (a, b), back, "sub")

    def mul(self, a: Node, b: Node) -> Node:
        self._broadcast_shape(a, b, "mul")

        def back(g):
            self._acc(a, _unbroadcast(g * b.value, a.shape))
            self._acc(b, _unbroadcast(g * a.value, b.shape))

        return self._emit(a.value * b.value, (a, b), back, "mul")

    def scale(self, x: Node, c: float) -> Node:
        c = float(c)
        return self._emit(x.value * c, (x,), lambda g: self._acc(x, g * c), "scale")

    def activate(self, x: Node, kind: str) -> Node:
        if kind not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")
        _check_finite(x.value, f"{kind} input")
        if kind == "relu":
            value = np.maximum(x.value, 0.0)
            mask = x.value > 0  # relu'(0) = 0
            back = lambda g: self._acc(x, g * mask)
        elif kind == "sigmoid":
            value = _sigmoid(x.value)
            back = lambda g: self._acc(x, g * value * (1.0 - value))
        else:
            value = np.tanh(x.value)
            back = lambda g: self._acc(x, g * (1.0 - value * value))
        return self._emit(value, (x,), back, kind)

    def row_softmax(self, x: Node) -> Node:
        shifted = x.value - x.value.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        value = e / e.sum(axis=1, keepdims=True)

        def back(g):
            inner = (g * value).sum(axis=1, keepdims=True)
            self._acc(x, value * (g - inner))

        return self._emit(value, (x,), back, "row_softmax")

    def dropout(self, x: Node, rate: float, training: bool, rng: np.random.Generator | None) -> Node:
        """Inverted dropout: survivors scaled by 1/(1-rate), identity in eval."""
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"dropout rate must lie in [0, 1), got {rate}")
        if not training or rate == 0.0:
            return x
        if rng is None:
            raise ConfigError("dropout in training mode needs a seeded generator")
        mask = (rng.random(x.shape, dtype=np.float32) >= rate) * (1.0 / (1.0 - rate))
        return self._emit(x.value * mask, (x,), lambda g: self._acc(x, g * mask), "dropout")

    def clip(self, x: Node, lo: float, hi: float) -> Node:
        inside = (x.value >= lo) & (x.value <= hi)
        value = np.clip(x.value, lo, hi)
        return self._emit(value, (x,), lambda g: self._acc(x, g * inside), "clip")

    # -- shape ------------------------------------------------------------

    def concat(self, parts: Sequence[Node]) -> Node:
        """Column-wise concatenation."""
        rows = {p.shape[0] for p in parts}
        if len(rows) != 1:
            raise ShapeError(f"concat: row counts differ: {[p.shape for p in parts]}")
        widths = np.cumsum([0] + [p.shape[1] for p in parts])

        def back(g):
            for p, lo, hi in zip(parts, widths[:-1], widths[1:]):
                self._acc(p, g[:, lo:hi])

        value = np.concatenate([p.value for p in parts], axis=1)
        return self._emit(value, parts, back, "concat")

    def column(self, x: Node, j: int) -> Node:
        def back(g):
            full = np.zeros_like(x.value)
            full[:, j : j + 1] = g
            self._acc(x, full)

        return self._emit(x.value[:, j : j + 1].copy(), (x,), back, "column")

    def take_rows(self, x: Node, index) -> Node:
        idx = np.asarray(index, dtype=np.intp)

        def back(g):
            full = np.zeros_like(x.value)
            np.add.at(full, idx, g)
            self._acc(x, full)

        return self._emit(x.value[idx], (x,), back, "take_rows")

    # -- reductions and losses --------------------------------------------

    def sum_all(self, x: Node) -> Node:
        return self._emit(
            np.array([[x.value.sum()]]), (x,), lambda g: self._acc(x, np.full(x.shape, g[0, 0])), "sum"
        )

    def sum_squares(self, x: Node) -> Node:
        return self._emit(
            np.array([[np.sum(x.value * x.value)]]),
            (x,),
            lambda g: self._acc(x, 2.0 * g[0, 0] * x.value),
            "sum_squares",
        )

    def bce(self, p: Node, y) -> Node:
        """Mean binary cross-entropy of probabilities ``p`` (n x 1) against 0/1 labels."""
        labels = np.asarray(y, dtype=np.float64).reshape(-1, 1)
        if labels.shape[0] != p.shape[0] or p.shape[1] != 1:
            raise ShapeError(f"bce: probabilities {p.shape} vs labels {labels.shape}")
        if not np.isin(labels, (0.0, 1.0)).all():
            raise DataError("bce: labels must be 0 or 1")
        if ((p.value <= 0.0) | (p.value >= 1.0)).any():
            raise NumericError("bce: probabilities must lie strictly inside (0, 1)")
        n = labels.shape[0]
        pv = p.value
        value = -np.mean(labels * np.log(pv) + (1.0 - labels) * np.log(1.0 - pv))

        def back(g):
            self._acc(p, g[0, 0] * (-(labels / pv) + (1.0 - labels) / (1.0 - pv)) / n)

        return self._emit(np.array([[value]]), (p,), back, "bce")


def _ordered_neighbor_sum(x: np.ndarray, indptr: np.ndarray, indices: np.ndarray) -> np.ndarray:
    n, d = x.shape
    out = np.zeros((n, d))
    if indices.size == 0 or d == 0:
        return out
    # Rank rows by their raw bytes; equal ranks only for identical rows, whose
    # order in a sum is irrelevant. Summing neighbors by rank makes each row's
    # result independent of node numbering.
    rows = np.ascontiguousarray(x)
    keys = rows.view(np.dtype((np.void, rows.dtype.itemsize * d))).ravel()
    rank = np.empty(n, dtype=np.intp)
    rank[np.argsort(keys, kind="stable")] = np.arange(n)
    counts = np.diff(indptr)
    owner = np.repeat(np.arange(n), counts)
    order = np.lexsort((rank[indices], owner))
    gathered = rows[indices[order]]
    nonempty = counts > 0
    out[nonempty] = np.add.reduceat(gathered, indptr[:-1][nonempty], axis=0)
    return out


def grad_check(
    loss_and_grad: Callable[[Mapping[str, np.ndarray]], tuple[float, Mapping[str, np.ndarray]]],
    params: Mapping[str, np.ndarray],
    n_coords: int = 50,
    step: float = 1e-5,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``loss_and_grad(params)`` must be deterministic and return the scalar loss
    and a gradient array per parameter name. At least one coordinate of every
    parameter is probed; the remaining budget is sampled uniformly over all
    coordinates. The error of a coordinate is
    ``|analytic - numeric| / max(1, |analytic|, |numeric|)``.
    """
    base = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    loss0, grads = loss_and_grad(base)
    if not np.isfinite(loss0):
        raise NumericError(f"grad_check: loss is {loss0} at the base point")
    rng = np.random.default_rng(seed)
    names = list(base)
    sizes = np.array([base[k].size for k in names])
    probes = [(k, int(rng.integers(base[k].size))) for k in names if base[k].size]
    extra = max(0, n_coords - len(probes))
    if extra:
        flat = rng.choice(sizes.sum(), size=min(extra, sizes.sum()), replace=False)
        offsets = np.cumsum(sizes) - sizes
        for f in flat:
            i = int(np.searchsorted(offsets, f, side="right") - 1)
            probes.append((names[i], int(f - offsets[i])))

    worst = 0.0
    for name, flat_idx in probes:
        idx = np.unravel_index(flat_idx, base[name].shape)
        orig = base[name][idx]
        base[name][idx] = orig + step
        up, _ = loss_and_grad(base)
        base[name][idx] = orig - step
        down, _ = loss_and_grad(base)
        base[name][idx] = orig
        if not (np.isfinite(up) and np.isfinite(down)):
            raise NumericError(f"grad_check: non-finite loss probing {name}{idx}")
        numeric = (up - down) / (2.0 * step)
        analytic = float(np.asarray(grads[name])[idx])
        err = abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))
        worst = max(worst, err)
    return worst
