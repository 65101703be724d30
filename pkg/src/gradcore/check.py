"""Central finite-difference gradient checker."""

from collections.abc import Callable, Mapping
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from src.errors import ContractError, ReproducibilityError
from src.gradcore.tape import Node, Tape, Tensor, as_tensor, backward

# Builds a scalar root from leaves recorded on a fresh tape.
GraphBuilder = Callable[[Tape, Mapping[str, Node]], Node]


@dataclass(frozen=True)
class GradCheckReport:
    """Per-leaf worst relative error between analytic and numeric gradients."""

    errors: dict[str, float]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(err <= self.tolerance for err in self.errors.values())

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def worst_leaf(self) -> str | None:
        if not self.errors:
            return None
        return max(self.errors, key=lambda name: self.errors[name])

    @property
    def failing_leaves(self) -> list[str]:
        return [name for name, err in self.errors.items() if err > self.tolerance]


def _evaluate(
    builder: GraphBuilder, values: Mapping[str, Tensor]
) -> tuple[Tape, Node, dict[str, Node]]:
    tape = Tape()
    leaves = {name: tape.leaf(value, name=name) for name, value in values.items()}
    root = builder(tape, leaves)
    if root.shape != (1, 1):
        raise ContractError(f"graph builder must return a 1x1 root, got {root.shape}")
    return tape, root, leaves


def grad_check(
    builder: GraphBuilder,
    leaves: Mapping[str, ArrayLike],
    tolerance: float = 1e-4,
    *,
    step: float = 1e-5,
    floor: float = 1e-2,
    max_entries: int | None = None,
    seed: int = 0,
) -> GradCheckReport:
    """Compare backward() gradients with central finite differences.

    The relative error of one entry is ``|a - n| / max(|a|, |n|, floor)``.

    Args:
        builder: Deterministic graph builder over the named leaves.
        leaves: Leaf values by name.
        tolerance: Largest accepted relative error.
        step: Finite-difference step.
        floor: Denominator floor for vanishing gradients.
        max_entries: If set, check a seeded random sample of this many entries per leaf.
        seed: Seed for entry sampling.

    Returns:
        Report with the worst error per leaf.

    Raises:
        ReproducibilityError: If two forward passes disagree.
    """
    values = {name: as_tensor(value) for name, value in leaves.items()}
    tape, root, nodes = _evaluate(builder, values)
    _, replay, _ = _evaluate(builder, values)
    if root.value.tobytes() != replay.value.tobytes():
        raise ReproducibilityError(
            f"graph builder is not deterministic: {root.item()!r} != {replay.item()!r}"
        )
    backward(tape, root)

    rng = np.random.default_rng(seed)
    errors: dict[str, float] = {}
    for name, base in values.items():
        analytic = nodes[name].grad
        indices = np.arange(base.size)
        if max_entries is not None and base.size > max_entries:
            indices = np.sort(rng.choice(base.size, size=max_entries, replace=False))
        worst = 0.0
        for flat in indices:
            numeric = _central_difference(builder, values, name, int(flat), step)
            exact = float(analytic.flat[flat])
            denom = max(abs(exact), abs(numeric), floor)
            worst = max(worst, abs(exact - numeric) / denom)
        errors[name] = worst
    return GradCheckReport(errors=errors, tolerance=tolerance)


def _central_difference(
    builder: GraphBuilder, values: Mapping[str, Tensor], name: str, flat: int, step: float
) -> float:
    outputs = []
    for delta in (step, -step):
        perturbed = np.array(values[name])
        perturbed.flat[flat] += delta
        shifted = dict(values)
        shifted[name] = as_tensor(perturbed)
        _, root, _ = _evaluate(builder, shifted)
        outputs.append(root.item())
    return (outputs[0] - outputs[1]) / (2.0 * step)


def numeric_gradient(
    builder: GraphBuilder, leaves: Mapping[str, ArrayLike], name: str, *, step: float = 1e-5
) -> Tensor:
    """Central finite-difference gradient of the builder's root with respect to one leaf."""
    values = {key: as_tensor(value) for key, value in leaves.items()}
    if name not in values:
        raise ContractError(f"unknown leaf {name!r}")
    base = values[name]
    grad = np.zeros(base.shape)
    for flat in range(base.size):
        grad.flat[flat] = _central_difference(builder, values, name, flat, step)
    return grad
