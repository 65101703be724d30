"""Forward passes of the main (WSI) branch and the gene branch.

Main branch: H' = [H; P] -> attention pool -> F_c (FC + SELU) -> {head h, G_y, GRL -> G_d}.
Gene branch: x_g -> FC + SELU -> z_g -> pretraining classifier.
"""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from src.errors import DataError, ShapeError
from src.gradcore import (
    Node,
    Tape,
    Tensor,
    add,
    concat_rows,
    grad_reverse,
    matmul,
    mul,
    selu,
    sigmoid,
    softmax_row,
    stop_grad,
    tanh,
    transpose,
)
from src.models.bag import Bag
from src.models.params import GeneParams, MainParams

Leaves = Mapping[str, Node]


@dataclass(frozen=True)
class MainOutput:
    """Nodes produced by one main-branch forward pass.

    Attributes:
        p_x: Siamese head projection (1 x emb).
        y_logits: Subtype logits (1 x num_subtypes).
        d_logits: Domain logits behind the gradient reversal (1 x num_domains).
        attention: Attention weights over the K = n + n_p rows (K x 1).
        features: Shared feature f = SELU(F_c(z')) (1 x emb).
        pooled: Pooled bag embedding z' (1 x d).
    """

    p_x: Node
    y_logits: Node
    d_logits: Node
    attention: Node
    features: Node
    pooled: Node


@dataclass(frozen=True)
class GeneOutput:
    z_g: Node
    logits: Node


def linear(x: Node, weight: Node, bias: Node) -> Node:
    return add(matmul(x, weight), bias)


def append_prompts(instances: Node, leaves: Leaves) -> Node:
    """Stack the prompt rows under the instance rows: H' = [H; P].

    With no prompts the instance node itself is returned.
    """
    prompts = leaves["prompts"]
    if instances.cols != prompts.cols:
        raise ShapeError(
            f"prompt width mismatch: instances {instances.shape}, prompts {prompts.shape}"
        )
    if prompts.rows == 0:
        return instances
    return concat_rows([instances, prompts])


def abmil_pool(h_prime: Node, leaves: Leaves) -> tuple[Node, Node]:
    """Attention-pool the rows of ``h_prime``.

    Scores are ``w^T tanh(V h_k)``, or ``w^T (tanh(V h_k) * sigmoid(U h_k))`` when the
    parameters carry a gate ``U``. Attention is the softmax of the scores over rows.

    Returns:
        Pooled embedding (1 x d) and attention weights (K x 1).
    """
    hidden = tanh(matmul(h_prime, transpose(leaves["V"])))
    if "U" in leaves:
        hidden = mul(hidden, sigmoid(matmul(h_prime, transpose(leaves["U"]))))
    scores = matmul(hidden, leaves["w"])
    weights = softmax_row(transpose(scores))
    pooled = matmul(weights, h_prime)
    return pooled, transpose(weights)


def main_forward(bag: Bag, leaves: Leaves, lambda_p: float) -> MainOutput:
    """Run the main branch for one bag on the tape that owns ``leaves``.

    ``lambda_p`` only weights the gradient reversal in front of G_d; forward values
    do not depend on it. The reversed gradient updates F_c and stops at the pooled
    embedding, so the prompts and the attention pool only learn from the other terms.
    """
    tape = leaves["fc_W"].tape
    instances = tape.leaf(bag.instances, name=f"H[{bag.sample_id}]")
    pooled, attention = abmil_pool(append_prompts(instances, leaves), leaves)
    features = selu(linear(pooled, leaves["fc_W"], leaves["fc_b"]))
    hidden = selu(linear(features, leaves["head_W1"], leaves["head_b1"]))
    p_x = linear(hidden, leaves["head_W2"], leaves["head_b2"])
    y_logits = linear(features, leaves["gy_W"], leaves["gy_b"])
    extracted = selu(linear(stop_grad(pooled), leaves["fc_W"], leaves["fc_b"]))
    reversed_features = grad_reverse(extracted, lambda_p)
    d_logits = linear(reversed_features, leaves["gd_W"], leaves["gd_b"])
    return MainOutput(
        p_x=p_x,
        y_logits=y_logits,
        d_logits=d_logits,
        attention=attention,
        features=features,
        pooled=pooled,
    )


def gene_forward(gene_vector: Node, leaves: Leaves) -> GeneOutput:
    """Encode gene vectors: z_g = SELU(x_g W + b); logits = z_g W_clf + b_clf.

    ``gene_vector`` may hold one row per sample.
    """
    if gene_vector.cols != leaves["gene_W"].rows:
        raise ShapeError(
            f"gene vector length mismatch: {gene_vector.shape} vs encoder {leaves['gene_W'].shape}"
        )
    z_g = selu(linear(gene_vector, leaves["gene_W"], leaves["gene_b"]))
    return GeneOutput(z_g=z_g, logits=linear(z_g, leaves["clf_W"], leaves["clf_b"]))


# =============================================================================
# Inference (no gradients needed, gene vectors optional)
# =============================================================================


def _main_outputs(params: MainParams, bags: Sequence[Bag]) -> list[MainOutput]:
    outputs = []
    for bag in bags:
        leaves = params.bind(Tape())
        outputs.append(main_forward(bag, leaves, 0.0))
    return outputs


def predict_proba(params: MainParams, bags: Sequence[Bag]) -> Tensor:
    """Subtype probabilities (N x num_subtypes) from WSI instances alone."""
    logits = np.vstack([out.y_logits.value for out in _main_outputs(params, bags)])
    return np.asarray(softmax(logits, axis=1), dtype=np.float64)


def embed(params: MainParams, bags: Sequence[Bag]) -> Tensor:
    """Shared features f (N x emb) used for embedding analysis."""
    return np.vstack([out.features.value for out in _main_outputs(params, bags)])


def attention_weights(params: MainParams, bag: Bag) -> Tensor:
    """Attention over the bag's instances followed by its prompts (K x 1)."""
    return _main_outputs(params, [bag])[0].attention.value.copy()


def stack_gene_vectors(bags: Sequence[Bag]) -> Tensor:
    """Stack gene vectors row-wise.

    Raises:
        DataError: If any bag lacks its gene vector.
    """
    missing = [bag.sample_id for bag in bags if bag.gene_vector is None]
    if missing:
        raise DataError(f"{len(missing)} samples have no gene vector (first: {missing[0]!r})")
    return np.vstack([bag.gene_vector for bag in bags if bag.gene_vector is not None])


def gene_embed(params: GeneParams, bags: Sequence[Bag]) -> Tensor:
    tape = Tape()
    genes = tape.leaf(stack_gene_vectors(bags), name="x_g")
    return gene_forward(genes, params.bind(tape)).z_g.value.copy()


def gene_predict_proba(params: GeneParams, bags: Sequence[Bag]) -> Tensor:
    """Subtype probabilities of the gene-only classifier."""
    tape = Tape()
    genes = tape.leaf(stack_gene_vectors(bags), name="x_g")
    logits = gene_forward(genes, params.bind(tape)).logits.value
    return np.asarray(softmax(logits, axis=1), dtype=np.float64)
