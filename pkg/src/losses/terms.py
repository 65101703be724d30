"""Objective terms: Siamese similarity, classification CE, DANN and the mixed total."""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from src.errors import ContractError
from src.gradcore import (
    Node,
    add,
    cosine,
    log_softmax_row,
    mean,
    scale,
    stop_grad,
    take,
)


@dataclass(frozen=True)
class LossBundle:
    """Loss values of one evaluation of the objective.

    ``total`` is the node to differentiate. Terms a variant does not use are NaN.
    """

    total: Node
    L_S: float
    L_y: float
    L_d: float
    L_D: float
    lambda_p: float

    @property
    def L_TOT(self) -> float:
        return self.total.item()

    def as_row(self) -> dict[str, float]:
        return {
            "lambda_p": self.lambda_p,
            "L_S": self.L_S,
            "L_y": self.L_y,
            "L_d": self.L_d,
            "L_TOT": self.L_TOT,
        }


def neg_cosine(p_x: Node, z_g: Node) -> Node:
    """Negative cosine similarity, in [-1, 1]."""
    return scale(cosine(p_x, z_g), -1.0)


def siamese_loss(p_x: Node, z_g: Node) -> Node:
    """``neg_cosine(p_x, stop_grad(z_g))``: the gene embedding acts as a fixed target."""
    return neg_cosine(p_x, stop_grad(z_g))


def cross_entropy(logits: Node, labels: int | Sequence[int]) -> Node:
    """Mean softmax cross-entropy of the rows of ``logits`` against integer labels.

    Args:
        logits: N x C logits.
        labels: One label, or one label per row.

    Raises:
        ContractError: If a label is outside ``[0, C)`` or the counts differ.
    """
    targets = [int(label) for label in np.atleast_1d(labels)]
    if len(targets) != logits.rows:
        raise ContractError(f"{len(targets)} labels for {logits.rows} rows of logits")
    for label in targets:
        if not 0 <= label < logits.cols:
            raise ContractError(f"label {label} outside [0, {logits.cols})")
    picked = take(log_softmax_row(logits), range(logits.rows), targets)
    return scale(mean(picked), -1.0)


def dann_loss(
    y_logits: Node,
    y_label: int | Sequence[int],
    d_logits: Node,
    d_label: int | Sequence[int],
) -> tuple[Node, Node, Node]:
    """Return ``(L_D, L_y, L_d)`` with ``L_D = L_y + L_d``.

    The adversarial sign lives in the gradient reversal in front of ``d_logits``.
    """
    l_y = cross_entropy(y_logits, y_label)
    l_d = cross_entropy(d_logits, d_label)
    return add(l_y, l_d), l_y, l_d


def total_loss(l_s: Node, l_d_total: Node, lambda_p: float) -> Node:
    """``(1 - lambda_p) * L_S + lambda_p * L_D``.

    Raises:
        ContractError: If ``lambda_p`` is outside ``[0, 1]``.
    """
    if not 0.0 <= lambda_p <= 1.0:
        raise ContractError(f"lambda_p must be in [0, 1], got {lambda_p}")
    return add(scale(l_s, 1.0 - lambda_p), scale(l_d_total, lambda_p))
