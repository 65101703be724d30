"""Differentiable operations over tape nodes.

Every op records its output on the parents' tape together with an exact
vector-jacobian product. Two ops are deliberately non-standard:
``grad_reverse`` (identity forward, gradient scaled by -weight) and
``stop_grad`` (identity forward, no gradient).
"""

from collections.abc import Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import expit

from src.errors import ContractError, NumericError, ShapeError
from src.gradcore.tape import Node, OpKind, Tensor

SELU_SCALE = 1.0507009873554804934193349852946
SELU_ALPHA = 1.6732632423543772848170429916717


def selu_values(x: ArrayLike) -> Tensor:
    """Elementwise SELU on plain arrays (no graph)."""
    array = np.asarray(x, dtype=np.float64)
    negative = SELU_SCALE * SELU_ALPHA * np.expm1(np.minimum(array, 0.0))
    return np.where(array > 0.0, SELU_SCALE * array, negative)


def matmul(a: Node, b: Node) -> Node:
    """Matrix product ``a @ b``."""
    if a.cols != b.rows:
        raise ShapeError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    av, bv = a.value, b.value

    def vjp(g: Tensor) -> tuple[Tensor, Tensor]:
        return g @ bv.T, av.T @ g

    return a.tape.record(OpKind.MATMUL, (a, b), av @ bv, vjp)


def add(a: Node, b: Node) -> Node:
    """Elementwise sum; ``b`` may be a 1xC row broadcast over the rows of ``a``."""
    broadcast = b.shape != a.shape
    if broadcast and b.shape != (1, a.cols):
        raise ShapeError(f"add shape mismatch: {a.shape} + {b.shape}")

    def vjp(g: Tensor) -> tuple[Tensor, Tensor]:
        return g, g.sum(axis=0, keepdims=True) if broadcast else g

    return a.tape.record(OpKind.ADD, (a, b), a.value + b.value, vjp)


def mul(a: Node, b: Node) -> Node:
    """Elementwise product of equally shaped nodes."""
    if a.shape != b.shape:
        raise ShapeError(f"mul shape mismatch: {a.shape} * {b.shape}")
    av, bv = a.value, b.value

    def vjp(g: Tensor) -> tuple[Tensor, Tensor]:
        return g * bv, g * av

    return a.tape.record(OpKind.MUL, (a, b), av * bv, vjp)


def scale(x: Node, factor: float) -> Node:
    """Multiply by a constant."""

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (g * factor,)

    return x.tape.record(OpKind.SCALE, (x,), x.value * factor, vjp, {"factor": factor})


def tanh(x: Node) -> Node:
    y = np.tanh(x.value)

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (g * (1.0 - y * y),)

    return x.tape.record(OpKind.TANH, (x,), y, vjp)


def sigmoid(x: Node) -> Node:
    y = expit(x.value)

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (g * y * (1.0 - y),)

    return x.tape.record(OpKind.SIGMOID, (x,), y, vjp)


def selu(x: Node) -> Node:
    """Scaled exponential linear unit with the self-normalizing constants."""
    xv = x.value
    slope = np.where(xv > 0.0, SELU_SCALE, SELU_SCALE * SELU_ALPHA * np.exp(np.minimum(xv, 0.0)))

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (g * slope,)

    return x.tape.record(OpKind.SELU, (x,), selu_values(xv), vjp)


def softmax_row(x: Node) -> Node:
    """Row-wise softmax with max subtraction."""
    if x.cols < 1:
        raise ShapeError("softmax_row needs at least one column")
    shifted = np.exp(x.value - x.value.max(axis=1, keepdims=True))
    y = shifted / shifted.sum(axis=1, keepdims=True)

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (y * (g - (g * y).sum(axis=1, keepdims=True)),)

    return x.tape.record(OpKind.SOFTMAX_ROW, (x,), y, vjp)


def log_softmax_row(x: Node) -> Node:
    """Row-wise log-softmax via log-sum-exp."""
    if x.cols < 1:
        raise ShapeError("log_softmax_row needs at least one column")
    shifted = x.value - x.value.max(axis=1, keepdims=True)
    y = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    probs = np.exp(y)

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (g - probs * g.sum(axis=1, keepdims=True),)

    return x.tape.record(OpKind.LOG_SOFTMAX_ROW, (x,), y, vjp)


def log(x: Node) -> Node:
    if np.any(x.value <= 0.0):
        raise NumericError("log of a non-positive value")
    xv = x.value

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (g / xv,)

    return x.tape.record(OpKind.LOG, (x,), np.log(xv), vjp)


def exp(x: Node) -> Node:
    y = np.exp(x.value)

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (g * y,)

    return x.tape.record(OpKind.EXP, (x,), y, vjp)


def mean(x: Node) -> Node:
    """Mean of all entries, as a 1x1 node."""
    size = x.value.size
    if size == 0:
        raise ShapeError("mean of an empty tensor")
    shape = x.shape

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (np.full(shape, g[0, 0] / size),)

    return x.tape.record(OpKind.MEAN, (x,), x.value.mean(), vjp)


def sum_all(x: Node) -> Node:
    """Sum of all entries, as a 1x1 node."""
    shape = x.shape

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (np.full(shape, g[0, 0]),)

    return x.tape.record(OpKind.SUM, (x,), x.value.sum(), vjp)


def concat_rows(nodes: Sequence[Node]) -> Node:
    """Stack nodes with equal column counts on top of each other."""
    if not nodes:
        raise ContractError("concat_rows needs at least one node")
    cols = nodes[0].cols
    for node in nodes:
        if node.cols != cols:
            raise ShapeError(f"concat_rows column mismatch: {nodes[0].shape} vs {node.shape}")
    bounds = np.cumsum([0] + [node.rows for node in nodes])

    def vjp(g: Tensor) -> list[Tensor]:
        return [g[start:stop] for start, stop in zip(bounds[:-1], bounds[1:], strict=True)]

    value = np.vstack([node.value for node in nodes])
    return nodes[0].tape.record(OpKind.CONCAT_ROWS, nodes, value, vjp)


def transpose(x: Node) -> Node:
    def vjp(g: Tensor) -> tuple[Tensor]:
        return (g.T,)

    return x.tape.record(OpKind.TRANSPOSE, (x,), x.value.T, vjp)


def take(x: Node, rows: Sequence[int], cols: Sequence[int]) -> Node:
    """Gather ``x[rows[i], cols[i]]`` into an Nx1 column."""
    row_idx = np.asarray(rows, dtype=np.intp)
    col_idx = np.asarray(cols, dtype=np.intp)
    if row_idx.shape != col_idx.shape:
        raise ShapeError(f"take index mismatch: {row_idx.shape} vs {col_idx.shape}")
    shape = x.shape

    def vjp(g: Tensor) -> tuple[Tensor]:
        scattered = np.zeros(shape)
        np.add.at(scattered, (row_idx, col_idx), g[:, 0])
        return (scattered,)

    return x.tape.record(OpKind.TAKE, (x,), x.value[row_idx, col_idx].reshape(-1, 1), vjp)


def cosine(a: Node, b: Node) -> Node:
    """Cosine similarity of two equally sized vectors, as a 1x1 node.

    Raises:
        ShapeError: If the sizes differ.
        NumericError: If either argument has zero norm.
    """
    if a.value.size != b.value.size:
        raise ShapeError(f"cosine size mismatch: {a.shape} vs {b.shape}")
    av, bv = a.value.ravel(), b.value.ravel()
    norm_a, norm_b = float(np.linalg.norm(av)), float(np.linalg.norm(bv))
    if norm_a == 0.0:
        raise NumericError("cosine: first argument has zero norm")
    if norm_b == 0.0:
        raise NumericError("cosine: second argument has zero norm")
    c = float(av @ bv) / (norm_a * norm_b)
    shape_a, shape_b = a.shape, b.shape

    def vjp(g: Tensor) -> tuple[Tensor, Tensor]:
        upstream = g[0, 0]
        grad_a = upstream * (bv / (norm_a * norm_b) - c * av / norm_a**2)
        grad_b = upstream * (av / (norm_a * norm_b) - c * bv / norm_b**2)
        return grad_a.reshape(shape_a), grad_b.reshape(shape_b)

    return a.tape.record(OpKind.COSINE, (a, b), c, vjp)


def grad_reverse(x: Node, weight: float) -> Node:
    """Identity forward; backward multiplies the incoming gradient by ``-weight``."""
    if weight < 0.0:
        raise ContractError(f"grad_reverse weight must be >= 0, got {weight}")

    def vjp(g: Tensor) -> tuple[Tensor]:
        return (g * -weight,)

    return x.tape.record(OpKind.GRAD_REVERSE, (x,), x.value, vjp, {"weight": weight})


def stop_grad(x: Node) -> Node:
    """Identity forward; nothing flows back into ``x``."""

    def vjp(_g: Tensor) -> tuple[None]:
        return (None,)

    return x.tape.record(OpKind.STOP_GRAD, (x,), x.value, vjp)
