"""Define-by-run computation graph: tensors, nodes, tapes and the backward pass.

A ``Tape`` records every ``Node`` in creation order, so parents always precede
their children and a reverse sweep over the tape is a valid topological order.
The tape is rebuilt on every forward pass.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.errors import ContractError, ShapeError

Tensor = NDArray[np.float64]

# Maps the upstream adjoint to one contribution per parent (None = no contribution).
VJP = Callable[[Tensor], Sequence[Tensor | None]]


def as_tensor(values: ArrayLike) -> Tensor:
    """Return an immutable 2-D float64 copy of ``values``.

    Scalars become 1x1 and 1-D arrays become row vectors.

    Raises:
        ShapeError: If the input has more than two dimensions.
    """
    array = np.array(values, dtype=np.float64)
    if array.ndim == 0:
        array = array.reshape(1, 1)
    elif array.ndim == 1:
        array = array.reshape(1, -1)
    elif array.ndim > 2:
        raise ShapeError(f"tensors are at most 2-D, got shape {array.shape}")
    array.setflags(write=False)
    return array


class OpKind(str, Enum):
    """Operation that produced a node."""

    LEAF = "leaf"
    MATMUL = "matmul"
    ADD = "add"
    MUL = "mul"
    SCALE = "scale"
    TANH = "tanh"
    SIGMOID = "sigmoid"
    SELU = "selu"
    SOFTMAX_ROW = "softmax-row"
    LOG_SOFTMAX_ROW = "log-softmax-row"
    LOG = "log"
    EXP = "exp"
    MEAN = "mean"
    SUM = "sum"
    CONCAT_ROWS = "concat-rows"
    TRANSPOSE = "transpose"
    TAKE = "take"
    COSINE = "cosine"
    GRAD_REVERSE = "grad-reverse"
    STOP_GRAD = "stop-grad"
    CUSTOM = "custom"


@dataclass(eq=False)
class Node:
    """One recorded value in a computation graph.

    Attributes:
        id: Position on the owning tape.
        op: Operation that produced the value.
        parents: Input nodes, all recorded earlier on the same tape.
        value: Forward value (read-only).
        tape: Owning tape.
        vjp: Vector-Jacobian product; ``None`` for leaves.
        aux: Op-specific scalars (e.g. the reversal weight).
        name: Optional label, used by gradient reports.
        grad: Accumulated gradient of the last backward root(s).
        reached: Whether the last backward pass propagated into this node.
    """

    id: int
    op: OpKind
    parents: tuple["Node", ...]
    value: Tensor
    tape: "Tape"
    vjp: VJP | None = None
    aux: dict[str, float] = field(default_factory=dict)
    name: str | None = None
    grad: NDArray[np.float64] = field(init=False)
    reached: bool = field(init=False, default=False)

    def __post_init__(self) -> None:
        self.grad = np.zeros_like(self.value)

    @property
    def shape(self) -> tuple[int, int]:
        rows, cols = self.value.shape
        return rows, cols

    @property
    def rows(self) -> int:
        return int(self.value.shape[0])

    @property
    def cols(self) -> int:
        return int(self.value.shape[1])

    def item(self) -> float:
        """Return the value of a 1x1 node as a float."""
        if self.shape != (1, 1):
            raise ShapeError(f"item() needs a 1x1 node, got {self.shape}")
        return float(self.value[0, 0])

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Node(#{self.id} {self.op.value}{label} shape={self.shape})"


class Tape:
    """Ordered record of the nodes of one forward pass."""

    def __init__(self) -> None:
        self.nodes: list[Node] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def leaf(self, values: ArrayLike, name: str | None = None) -> Node:
        """Record an input or parameter value."""
        value = values if _is_frozen_tensor(values) else as_tensor(values)
        return self._append(OpKind.LEAF, (), value, None, {}, name)

    def record(
        self,
        op: OpKind,
        parents: Sequence[Node],
        value: ArrayLike,
        vjp: VJP,
        aux: dict[str, float] | None = None,
    ) -> Node:
        """Record the result of an operation over ``parents``.

        Raises:
            ContractError: If a parent belongs to a different tape.
        """
        for parent in parents:
            if parent.tape is not self:
                raise ContractError(f"{parent!r} belongs to a different tape")
        tensor = value if _is_frozen_tensor(value) else as_tensor(value)
        return self._append(op, tuple(parents), tensor, vjp, aux or {}, None)

    def _append(
        self,
        op: OpKind,
        parents: tuple[Node, ...],
        value: Tensor,
        vjp: VJP | None,
        aux: dict[str, float],
        name: str | None,
    ) -> Node:
        node = Node(
            id=len(self.nodes),
            op=op,
            parents=parents,
            value=value,
            tape=self,
            vjp=vjp,
            aux=aux,
            name=name,
        )
        self.nodes.append(node)
        return node

    def zero_grad(self) -> None:
        """Reset every gradient to zero and clear reachability marks."""
        for node in self.nodes:
            node.grad = np.zeros_like(node.value)
            node.reached = False

    def leaves(self) -> list[Node]:
        return [node for node in self.nodes if node.op is OpKind.LEAF]


def _is_frozen_tensor(values: Any) -> bool:
    return (
        isinstance(values, np.ndarray)
        and values.dtype == np.float64
        and values.ndim == 2
        and not values.flags.writeable
    )


def backward(tape: Tape, root: Node) -> None:
    """Accumulate d(root)/d(node) into ``node.grad`` for every ancestor of ``root``.

    Gradients are added to whatever the nodes already hold: a second call
    without ``tape.zero_grad()`` doubles every gradient.

    Raises:
        ContractError: If ``root`` is not 1x1 or is not on ``tape``.
    """
    if root.tape is not tape:
        raise ContractError("backward root is not recorded on this tape")
    if root.shape != (1, 1):
        raise ContractError(f"backward needs a scalar (1x1) root, got {root.shape}")

    adjoints: dict[int, Tensor] = {root.id: np.ones((1, 1))}
    for node in reversed(tape.nodes[: root.id + 1]):
        adjoint = adjoints.pop(node.id, None)
        if adjoint is None:
            continue
        node.reached = True
        node.grad += adjoint
        if node.vjp is None:
            continue
        for parent, contribution in zip(node.parents, node.vjp(adjoint), strict=True):
            if contribution is None:
                continue
            previous = adjoints.get(parent.id)
            adjoints[parent.id] = contribution if previous is None else previous + contribution
