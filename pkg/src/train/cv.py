"""K-fold cross-validation driver with a shared hold-out test set."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from pydantic import BaseModel, ConfigDict

from src.data import Dataset, SplitPlan
from src.errors import DegenerateError
from src.metrics import (
    MetricsReport,
    MetricSummary,
    evaluate_bags,
    evaluate_gene_bags,
    spread_size_correlation,
    summarize,
)
from src.models import ArchitectureConfig, GeneParams, MainParams, save_checkpoint
from src.train.config import StageMode, TrainConfig, Variant
from src.train.gene import pretrain_gene
from src.train.history import TrainingHistory
from src.train.loops import train_main

logger = logging.getLogger(__name__)


class FoldReport(BaseModel):
    """Metrics of one fold's model.

    Attributes:
        fold: Fold index (validation fold of the run).
        val: Metrics on the fold's validation ids.
        test: Metrics on the shared hold-out test set.
        gene_test: Test metrics of the frozen gene-only classifier, if pretrained.
        best_epoch: Epoch whose parameters were kept.
        epochs_run: Epochs actually trained.
    """

    fold: int
    val: MetricsReport
    test: MetricsReport
    gene_test: MetricsReport | None = None
    best_epoch: int | None = None
    epochs_run: int


class CVReport(BaseModel):
    """Per-fold metrics and their mean and sample standard deviation."""

    model_config = ConfigDict(frozen=True)

    variant: Variant
    stage_mode: StageMode
    folds: list[FoldReport]
    val_summary: dict[str, MetricSummary]
    summary: dict[str, MetricSummary]
    gene_summary: dict[str, MetricSummary] | None = None
    spread_size_r: float | None = None

    def write(self, path: str | Path) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(self.model_dump_json(indent=2), encoding="utf-8")
        logger.info(f"Wrote CV report to {target}")
        return target


@dataclass(frozen=True)
class FoldRun:
    """Artifacts of one fold."""

    fold: int
    main: MainParams
    gene: GeneParams | None
    history: TrainingHistory
    report: FoldReport


@dataclass(frozen=True)
class CVResult:
    report: CVReport
    runs: list[FoldRun]

    @property
    def checkpoints(self) -> list[MainParams]:
        return [run.main for run in self.runs]


def run_fold(
    dataset: Dataset,
    split: SplitPlan,
    fold: int,
    config: TrainConfig,
    architecture: ArchitectureConfig | None = None,
) -> FoldRun:
    """Pretrain the gene branch, train the main branch and evaluate one fold."""
    logger.info(
        f"Fold {fold}/{split.k}: variant {config.variant.value}, "
        f"{config.stage_mode.value}-stage"
    )
    gene = None
    if config.variant.use_siamese:
        gene = pretrain_gene(dataset, split, fold, config, architecture)
    main, history = train_main(dataset, split, fold, gene, config, architecture)
    _, val_ids = split.fold_partition(fold)
    test_bags = dataset.subset(split.test_ids).bags
    report = FoldReport(
        fold=fold,
        val=evaluate_bags(main, dataset.subset(val_ids).bags),
        test=evaluate_bags(main, test_bags),
        gene_test=evaluate_gene_bags(gene, test_bags) if gene is not None else None,
        best_epoch=history.best_epoch,
        epochs_run=len(history),
    )
    logger.info(
        f"Fold {fold} done: val ROCAUC {report.val.rocauc:.4f}, "
        f"test ROCAUC {report.test.rocauc:.4f}"
    )
    return FoldRun(fold=fold, main=main, gene=gene, history=history, report=report)


def _spread_size_r(dataset: Dataset, split: SplitPlan, reports: list[FoldReport]) -> float | None:
    per_domain: dict[int, list[float]] = {}
    for report in reports:
        for domain, metrics in (report.test.per_domain or {}).items():
            if metrics.rocauc is not None:
                per_domain.setdefault(domain, []).append(metrics.rocauc)
    sizes: dict[int, int] = {}
    for bag in dataset.subset(split.test_ids):
        sizes[bag.domain] = sizes.get(bag.domain, 0) + 1
    try:
        return spread_size_correlation(per_domain, sizes)
    except DegenerateError as err:
        logger.info(f"Spread/size correlation unavailable: {err}")
        return None


def run_cv(
    dataset: Dataset,
    split: SplitPlan,
    config: TrainConfig,
    architecture: ArchitectureConfig | None = None,
    *,
    parallel_folds: int = 1,
    out_dir: str | Path | None = None,
) -> CVResult:
    """Run every fold of ``split`` and aggregate validation and test metrics.

    Args:
        dataset: Full dataset.
        split: Hold-out test ids and folds.
        config: Training configuration (variant and stage mode included).
        architecture: Architecture overrides.
        parallel_folds: Number of folds trained concurrently.
        out_dir: If set, fold checkpoints and histories are written there.
    """
    split.check_dataset(dataset)
    folds = list(range(split.k))
    if parallel_folds > 1:
        with ThreadPoolExecutor(max_workers=parallel_folds) as pool:
            runs = list(
                pool.map(lambda f: run_fold(dataset, split, f, config, architecture), folds)
            )
    else:
        runs = [run_fold(dataset, split, fold, config, architecture) for fold in folds]

    if out_dir is not None:
        target = Path(out_dir)
        for run in runs:
            save_checkpoint(target / f"main_fold{run.fold}.bfck", run.main)
            if run.gene is not None:
                save_checkpoint(target / f"gene_fold{run.fold}.bfck", run.gene)
            run.history.write_csv(target / f"history_fold{run.fold}.csv")

    fold_reports = [run.report for run in runs]
    gene_reports = [r.gene_test for r in fold_reports if r.gene_test is not None]
    report = CVReport(
        variant=config.variant,
        stage_mode=config.stage_mode,
        folds=fold_reports,
        val_summary=summarize([r.val for r in fold_reports]),
        summary=summarize([r.test for r in fold_reports]),
        gene_summary=summarize(gene_reports) if gene_reports else None,
        spread_size_r=_spread_size_r(dataset, split, fold_reports),
    )
    logger.info(f"CV test ROCAUC {report.summary['rocauc']} over {split.k} folds")
    return CVResult(report=report, runs=runs)
