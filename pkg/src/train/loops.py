"""Main-branch training loops: one-stage, two-stage and the ablation entry point."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from src.data import Dataset, SplitPlan
from src.errors import ContractError
from src.gradcore import Tape, Tensor, backward
from src.losses import Schedule, lambda_schedule
from src.metrics import accuracy_f1, roc_auc_macro_ovr
from src.models import (
    DOMAIN_HEAD,
    ArchitectureConfig,
    Bag,
    GeneParams,
    MainParams,
    ModelConfig,
    init_params,
    predict_proba,
)
from src.train.config import StageMode, TrainConfig, Variant
from src.train.gene import pretrain_gene
from src.train.history import EarlyStopping, EpochRecord, TrainingHistory
from src.train.objective import Phase, build_batch_objective
from src.train.optimizer import AdamState, adam_step

logger = logging.getLogger(__name__)

Monitor = Literal["val_rocauc", "val_siamese"]


def model_config_for(
    dataset: Dataset, variant: Variant, architecture: ArchitectureConfig | None = None
) -> ModelConfig:
    """Model config for ``variant``: variants without prompts run with n_p = 0."""
    config = ModelConfig.for_dataset(dataset, architecture)
    return config if variant.use_prompts else config.with_prompts(0)


@dataclass
class _EpochRunner:
    """Shared state of one training phase."""

    main: MainParams
    gene: GeneParams | None
    train_bags: Sequence[Bag]
    val_bags: Sequence[Bag]
    model_config: ModelConfig
    variant: Variant
    config: TrainConfig
    rng: np.random.Generator
    state: AdamState = field(default_factory=AdamState)

    def train_epoch(self, lambda_p: float, phase: Phase) -> dict[str, float]:
        order = self.rng.permutation(len(self.train_bags))
        rows = []
        for start in range(0, len(order), self.config.batch_size):
            batch = [self.train_bags[i] for i in order[start : start + self.config.batch_size]]
            tape = Tape()
            main_leaves = self.main.bind(tape)
            gene_leaves = self.gene.bind(tape) if self.gene is not None else None
            bundle = build_batch_objective(
                tape,
                main_leaves,
                gene_leaves,
                batch,
                self.model_config,
                self.variant,
                lambda_p,
                phase=phase,
            )
            backward(tape, bundle.total)
            grads = {name: leaf.grad for name, leaf in main_leaves.items() if leaf.reached}
            self._step(grads)
            rows.append(bundle.as_row())
        return {name: float(np.mean([row[name] for row in rows])) for name in rows[0]}

    def _step(self, grads: dict[str, Tensor]) -> None:
        """One Adam update; G_d steps faster and with an L2 pull toward zero."""
        trunk = {name: grad for name, grad in grads.items() if name not in DOMAIN_HEAD}
        domain = {name: grad for name, grad in grads.items() if name in DOMAIN_HEAD}
        adam_step(self.main, trunk, self.state, self.config)
        if domain:
            adam_step(
                self.main,
                domain,
                self.state,
                self.config,
                lr=self.config.lr * self.config.domain_lr_scale,
                l2=self.config.domain_l2,
            )

    def validate(self) -> tuple[float, float]:
        """Validation ROCAUC and accuracy of the current parameters."""
        probs = predict_proba(self.main, self.val_bags)
        labels = [bag.subtype for bag in self.val_bags]
        acc, _, _ = accuracy_f1(probs.argmax(axis=1), labels, num_classes=probs.shape[1])
        return roc_auc_macro_ovr(probs, labels), acc

    def validation_siamese(self) -> float:
        tape = Tape()
        gene_leaves = self.gene.bind(tape) if self.gene is not None else None
        bundle = build_batch_objective(
            tape,
            self.main.bind(tape),
            gene_leaves,
            self.val_bags,
            self.model_config,
            self.variant,
            0.0,
            phase=Phase.SIAMESE,
        )
        return bundle.L_S

    def run(
        self,
        epochs: int,
        phase: Phase,
        history: TrainingHistory,
        *,
        schedule: Schedule | None,
        monitor: Monitor,
        epoch_offset: int = 0,
    ) -> tuple[MainParams, EarlyStopping]:
        """Train up to ``epochs`` epochs; return the best parameters under ``monitor``."""
        mode: Literal["max", "min"] = "max" if monitor == "val_rocauc" else "min"
        stopper = EarlyStopping(self.config.early_stop_patience, mode=mode)
        best = self.main.copy()
        for epoch in range(epochs):
            lambda_p = lambda_schedule(epoch, schedule) if schedule is not None else 0.0
            losses = self.train_epoch(lambda_p, phase)
            val_rocauc, val_acc = self.validate()
            monitored = val_rocauc if monitor == "val_rocauc" else self.validation_siamese()
            record = EpochRecord(
                epoch=epoch_offset + epoch,
                val_rocauc=val_rocauc,
                val_acc=val_acc,
                phase=phase.value,
                **losses,
            )
            history.append(record)
            logger.info(
                f"epoch {record.epoch} [{phase.value}] lambda_p={lambda_p:.4f} "
                f"L_TOT={record.L_TOT:.4f} val_rocauc={val_rocauc:.4f} val_acc={val_acc:.4f}"
            )
            if stopper.update(record.epoch, monitored):
                best = self.main.copy()
            if stopper.should_stop:
                logger.info(f"Early stop after epoch {record.epoch} ({monitor} did not improve)")
                history.stopped_early = True
                break
        return best, stopper


def _prepare(
    dataset: Dataset,
    split: SplitPlan,
    fold: int,
    gene_params: GeneParams | None,
    config: TrainConfig,
    architecture: ArchitectureConfig | None,
) -> _EpochRunner:
    variant = config.variant
    if variant.use_siamese:
        if gene_params is None:
            raise ContractError(f"variant {variant.value} needs pretrained gene parameters")
        if not gene_params.frozen:
            raise ContractError("gene parameters must be frozen before main-branch training")
    model_config = model_config_for(dataset, variant, architecture)
    train_ids, val_ids = split.fold_partition(fold)
    seed = config.seed + fold
    main, _ = init_params(model_config, seed)
    return _EpochRunner(
        main=main,
        gene=gene_params if variant.use_siamese else None,
        train_bags=dataset.subset(train_ids).bags,
        val_bags=dataset.subset(val_ids).bags,
        model_config=model_config,
        variant=variant,
        config=config,
        rng=np.random.default_rng(seed),
    )


def train_one_stage(
    dataset: Dataset,
    split: SplitPlan,
    fold: int,
    gene_params: GeneParams | None,
    config: TrainConfig,
    architecture: ArchitectureConfig | None = None,
) -> tuple[MainParams, TrainingHistory]:
    """Optimize every term of the variant jointly, lambda_p recomputed each epoch.

    Returns:
        The parameters of the best validation-ROCAUC epoch and the history.
    """
    runner = _prepare(dataset, split, fold, gene_params, config, architecture)
    logger.info(
        f"One-stage training of {config.variant.value} on fold {fold}: "
        f"{len(runner.train_bags)} train, {len(runner.val_bags)} val"
    )
    history = TrainingHistory()
    best, stopper = runner.run(
        config.max_epochs,
        Phase.JOINT,
        history,
        schedule=config.schedule(),
        monitor="val_rocauc",
    )
    history.best_epoch = stopper.best_epoch
    return best, history


def train_two_stage(
    dataset: Dataset,
    split: SplitPlan,
    fold: int,
    gene_params: GeneParams | None,
    config: TrainConfig,
    architecture: ArchitectureConfig | None = None,
) -> tuple[MainParams, TrainingHistory]:
    """Siamese phase, then an adversarial phase with a restarted lambda_p schedule.

    Phase A minimizes ``L_S`` for half the epoch budget, early-stopping on validation
    ``L_S``. Phase B continues from phase A's best parameters with ``L_D`` (``L_y``
    for variants without DANN) and keeps the best validation-ROCAUC epoch.

    Raises:
        ContractError: If the variant has no Siamese term, or the budget is under
            two epochs.
    """
    if not config.variant.use_siamese:
        raise ContractError(
            f"two-stage training needs a Siamese variant, got {config.variant.value}"
        )
    if config.max_epochs < 2:
        raise ContractError(f"two-stage training needs max_epochs >= 2, got {config.max_epochs}")
    runner = _prepare(dataset, split, fold, gene_params, config, architecture)
    phase_a_epochs = config.max_epochs // 2
    phase_b_epochs = config.max_epochs - phase_a_epochs
    logger.info(
        f"Two-stage training of {config.variant.value} on fold {fold}: "
        f"{phase_a_epochs} Siamese + {phase_b_epochs} adversarial epochs"
    )
    history = TrainingHistory()
    best_a, _ = runner.run(
        phase_a_epochs, Phase.SIAMESE, history, schedule=None, monitor="val_siamese"
    )

    runner.main = best_a
    runner.state = AdamState()
    best_b, stopper = runner.run(
        phase_b_epochs,
        Phase.ADVERSARIAL,
        history,
        schedule=config.schedule(phase_b_epochs),
        monitor="val_rocauc",
        epoch_offset=len(history),
    )
    history.best_epoch = stopper.best_epoch
    return best_b, history


def train_main(
    dataset: Dataset,
    split: SplitPlan,
    fold: int,
    gene_params: GeneParams | None,
    config: TrainConfig,
    architecture: ArchitectureConfig | None = None,
) -> tuple[MainParams, TrainingHistory]:
    """Dispatch on ``config.stage_mode``."""
    if config.stage_mode is StageMode.TWO:
        return train_two_stage(dataset, split, fold, gene_params, config, architecture)
    return train_one_stage(dataset, split, fold, gene_params, config, architecture)


def train_ablation(
    variant: Variant | str,
    dataset: Dataset,
    split: SplitPlan,
    fold: int,
    config: TrainConfig,
    architecture: ArchitectureConfig | None = None,
    gene_params: GeneParams | None = None,
) -> tuple[MainParams, TrainingHistory]:
    """Train one ablation variant, pretraining the gene branch if the variant needs it.

    Raises:
        ContractError: If ``variant`` is not a known variant name.
    """
    chosen = Variant.from_string(variant) if isinstance(variant, str) else variant
    run_config = config.with_overrides(variant=chosen)
    if chosen.use_siamese and gene_params is None:
        gene_params = pretrain_gene(dataset, split, fold, run_config, architecture)
    return train_main(dataset, split, fold, gene_params, run_config, architecture)
