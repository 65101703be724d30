"""Batch objective: per-sample graphs on one tape, batch means, variant-specific mixing."""

import logging
import math
from collections.abc import Mapping, Sequence
from enum import Enum

from src.errors import ContractError, DataError
from src.gradcore import Node, Tape, concat_rows, mean
from src.losses import LossBundle, cross_entropy, dann_loss, siamese_loss, total_loss
from src.models import Bag, ModelConfig, gene_forward, main_forward
from src.train.config import Variant

logger = logging.getLogger(__name__)


class Phase(str, Enum):
    """Which terms an objective evaluation optimizes."""

    JOINT = "joint"
    SIAMESE = "siamese"
    ADVERSARIAL = "adversarial"


def batch_mean(nodes: Sequence[Node]) -> Node:
    """Arithmetic mean of 1x1 nodes."""
    return mean(concat_rows(nodes))


def build_batch_objective(
    tape: Tape,
    main_leaves: Mapping[str, Node],
    gene_leaves: Mapping[str, Node] | None,
    bags: Sequence[Bag],
    model_config: ModelConfig,
    variant: Variant,
    lambda_p: float,
    *,
    phase: Phase = Phase.JOINT,
) -> LossBundle:
    """Record the objective of one batch on ``tape``.

    Joint phase:
        baseline / +prompts: ``L_y``.
        +dann: ``L_y + L_d`` with the gradient reversal weighted by ``lambda_p``.
        +siamese: ``(1 - lambda_p) L_S + lambda_p L_y``.
        +siamese+dann / full: ``(1 - lambda_p) L_S + lambda_p (L_y + L_d)``.
    Siamese phase: ``L_S``. Adversarial phase: ``L_y + L_d`` (``L_y`` without DANN).

    Raises:
        ContractError: If the layout disagrees with the variant or the batch is empty.
        DataError: If the Siamese term needs a gene vector a bag lacks.
    """
    if not bags:
        raise ContractError("cannot build an objective for an empty batch")
    if model_config.n_prompts and not variant.use_prompts:
        raise ContractError(
            f"variant {variant.value} runs without prompts, config has {model_config.n_prompts}"
        )
    if main_leaves["prompts"].rows != model_config.n_prompts:
        raise ContractError("bound prompt rows disagree with the model config")

    need_siamese = variant.use_siamese and phase is not Phase.ADVERSARIAL
    need_dann = variant.use_dann and phase is not Phase.SIAMESE
    if phase is Phase.SIAMESE and not variant.use_siamese:
        raise ContractError(f"variant {variant.value} has no Siamese term")
    if need_siamese and gene_leaves is None:
        raise ContractError("the Siamese term needs gene-branch parameters")

    grl_weight = lambda_p if need_dann else 0.0
    outputs = [main_forward(bag, main_leaves, grl_weight) for bag in bags]

    l_s = None
    if need_siamese and gene_leaves is not None:
        terms = []
        for bag, out in zip(bags, outputs, strict=True):
            if bag.gene_vector is None:
                raise DataError(f"sample {bag.sample_id!r} has no gene vector")
            genes = tape.leaf(bag.gene_vector, name=f"x_g[{bag.sample_id}]")
            terms.append(siamese_loss(out.p_x, gene_forward(genes, gene_leaves).z_g))
        l_s = batch_mean(terms)

    l_y = l_d = l_big_d = None
    if phase is not Phase.SIAMESE:
        y_logits = concat_rows([out.y_logits for out in outputs])
        subtypes = [bag.subtype for bag in bags]
        if need_dann:
            d_logits = concat_rows([out.d_logits for out in outputs])
            domains = [bag.domain for bag in bags]
            l_big_d, l_y, l_d = dann_loss(y_logits, subtypes, d_logits, domains)
        else:
            l_y = l_big_d = cross_entropy(y_logits, subtypes)

    if l_big_d is None:
        total = l_s
    elif l_s is None:
        total = l_big_d
    else:
        total = total_loss(l_s, l_big_d, lambda_p)
    if total is None:
        raise ContractError(f"phase {phase.value} selects no loss term for {variant.value}")

    bundle = LossBundle(
        total=total,
        L_S=_value(l_s),
        L_y=_value(l_y),
        L_d=_value(l_d),
        L_D=_value(l_big_d),
        lambda_p=lambda_p,
    )
    logger.debug(
        f"batch of {len(bags)}: L_TOT={bundle.L_TOT:.6f} L_S={bundle.L_S:.6f} "
        f"L_y={bundle.L_y:.6f} L_d={bundle.L_d:.6f}"
    )
    return bundle


def _value(node: Node | None) -> float:
    return math.nan if node is None else node.item()
