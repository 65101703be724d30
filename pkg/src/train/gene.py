"""Gene-branch pretraining: fit f_g and its classifier on subtype labels, then freeze."""

import logging

import numpy as np

from src.data import Dataset, SplitPlan
from src.gradcore import Tape, backward
from src.losses import cross_entropy
from src.models import (
    ArchitectureConfig,
    GeneParams,
    ModelConfig,
    gene_forward,
    gene_predict_proba,
    init_params,
    stack_gene_vectors,
)
from src.train.config import TrainConfig
from src.train.history import EarlyStopping
from src.train.optimizer import AdamState, adam_step

logger = logging.getLogger(__name__)


def pretrain_gene(
    dataset: Dataset,
    split: SplitPlan,
    fold: int,
    config: TrainConfig,
    architecture: ArchitectureConfig | None = None,
) -> GeneParams:
    """Train the gene encoder with cross-entropy on the fold's training part.

    Early-stops on fold-validation accuracy and returns the best epoch's parameters,
    frozen.

    Raises:
        DataError: If a training or validation bag has no gene vector.
    """
    model_config = ModelConfig.for_dataset(dataset, architecture)
    train_ids, val_ids = split.fold_partition(fold)
    train_bags = dataset.subset(train_ids).bags
    val_bags = dataset.subset(val_ids).bags
    genes = stack_gene_vectors(train_bags)
    stack_gene_vectors(val_bags)  # raises DataError early if validation genes are missing
    labels = np.array([bag.subtype for bag in train_bags])
    val_labels = np.array([bag.subtype for bag in val_bags])

    seed = config.seed + fold
    _, params = init_params(model_config, seed)
    rng = np.random.default_rng(seed)
    state = AdamState()
    stopper = EarlyStopping(config.early_stop_patience, mode="max")
    best = params.copy()

    logger.info(
        f"Pretraining gene branch (fold {fold}): {len(train_bags)} train, {len(val_bags)} val"
    )
    for epoch in range(config.pretrain_epochs):
        order = rng.permutation(len(train_bags))
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            tape = Tape()
            leaves = params.bind(tape)
            inputs = tape.leaf(genes[batch], name="x_g")
            loss = cross_entropy(gene_forward(inputs, leaves).logits, labels[batch].tolist())
            backward(tape, loss)
            grads = {name: leaf.grad for name, leaf in leaves.items() if leaf.reached}
            adam_step(params, grads, state, config, lr=config.pretrain_lr)

        predicted = gene_predict_proba(params, val_bags).argmax(axis=1)
        val_acc = float(np.mean(predicted == val_labels))
        if stopper.update(epoch, val_acc):
            best = params.copy()
        logger.debug(f"gene epoch {epoch}: val_acc={val_acc:.4f}")
        if stopper.should_stop:
            logger.info(f"Gene pretraining stopped early at epoch {epoch}")
            break

    best.freeze()
    logger.info(f"Gene branch frozen at epoch {stopper.best_epoch} (val acc {stopper.best:.4f})")
    return best
