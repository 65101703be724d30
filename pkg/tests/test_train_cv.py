"""Tests for src/train/cv.py - k-fold cross-validation."""

import json
from pathlib import Path

import pytest

from src.data import Dataset, SplitPlan
from src.errors import ContractError
from src.models import ArchitectureConfig, load_checkpoint
from src.train import CVReport, StageMode, TrainConfig, Variant, run_cv, run_fold


@pytest.fixture
def cv_config(fast_train_config: TrainConfig) -> TrainConfig:
    return fast_train_config.with_overrides(max_epochs=1, gene_max_epochs=1)


class TestRunFold:
    """Tests for run_fold()."""

    def test_full_variant_reports_gene_branch(
        self,
        tiny_dataset: Dataset,
        tiny_split: SplitPlan,
        cv_config: TrainConfig,
        tiny_architecture: ArchitectureConfig,
    ) -> None:
        run = run_fold(tiny_dataset, tiny_split, 1, cv_config, tiny_architecture)
        assert run.fold == 1
        assert run.gene is not None and run.gene.frozen
        assert run.report.gene_test is not None
        assert run.report.test.n_samples == len(tiny_split.test_ids)
        assert run.report.val.n_samples == len(tiny_split.folds[1])
        assert run.report.epochs_run == len(run.history)

    def test_baseline_skips_gene_branch(
        self,
        tiny_dataset: Dataset,
        tiny_split: SplitPlan,
        cv_config: TrainConfig,
        tiny_architecture: ArchitectureConfig,
    ) -> None:
        config = cv_config.with_overrides(variant=Variant.BASELINE)
        run = run_fold(tiny_dataset, tiny_split, 0, config, tiny_architecture)
        assert run.gene is None
        assert run.report.gene_test is None


class TestRunCV:
    """Tests for run_cv()."""

    def test_report_and_artifacts(
        self,
        tmp_path: Path,
        tiny_dataset: Dataset,
        tiny_split: SplitPlan,
        cv_config: TrainConfig,
        tiny_architecture: ArchitectureConfig,
    ) -> None:
        result = run_cv(
            tiny_dataset, tiny_split, cv_config, tiny_architecture, out_dir=tmp_path
        )
        report = result.report
        assert [fold.fold for fold in report.folds] == [0, 1, 2]
        assert set(report.summary) == {"rocauc", "prauc", "acc", "f1"}
        assert report.summary["rocauc"].values == [fold.test.rocauc for fold in report.folds]
        assert report.gene_summary is not None
        assert report.variant is Variant.FULL
        assert report.stage_mode is StageMode.ONE
        for fold in range(3):
            restored = load_checkpoint(tmp_path / f"main_fold{fold}.bfck")
            assert restored.same_as(result.checkpoints[fold])
            assert (tmp_path / f"gene_fold{fold}.bfck").exists()
            assert (tmp_path / f"history_fold{fold}.csv").exists()

        path = report.write(tmp_path / "cv_report.json")
        assert CVReport.model_validate(json.loads(path.read_text())) == report

    def test_parallel_folds_match_sequential(
        self,
        tiny_dataset: Dataset,
        tiny_split: SplitPlan,
        cv_config: TrainConfig,
        tiny_architecture: ArchitectureConfig,
    ) -> None:
        """Folds are independent, so concurrency must not change any result."""
        config = cv_config.with_overrides(variant=Variant.DANN)
        sequential = run_cv(tiny_dataset, tiny_split, config, tiny_architecture)
        parallel = run_cv(tiny_dataset, tiny_split, config, tiny_architecture, parallel_folds=3)
        for a, b in zip(sequential.checkpoints, parallel.checkpoints, strict=True):
            assert a.same_as(b)
        assert sequential.report == parallel.report

    def test_split_must_match_dataset(
        self, tiny_dataset: Dataset, tiny_split: SplitPlan, cv_config: TrainConfig
    ) -> None:
        other = tiny_dataset.subset(tiny_dataset.ids[:20])
        with pytest.raises(ContractError):
            run_cv(other, tiny_split, cv_config)
