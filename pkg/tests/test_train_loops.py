"""Tests for the batch objective, gene pretraining and the training loops."""

import math
from pathlib import Path

import numpy as np
import pytest

from src.data import Dataset, SplitPlan
from src.errors import ContractError, DataError
from src.gradcore import Tape, backward
from src.losses import LossBundle, lambda_schedule
from src.models import ArchitectureConfig, Bag, GeneParams, MainParams, ModelConfig, init_params
from src.train import (
    EarlyStopping,
    EpochRecord,
    Phase,
    StageMode,
    TrainConfig,
    TrainingHistory,
    Variant,
    build_batch_objective,
    model_config_for,
    pretrain_gene,
    train_ablation,
    train_main,
    train_one_stage,
    train_two_stage,
)
from src.train.loops import _prepare

# =============================================================================
# Batch objective
# =============================================================================


def _objective(
    config: ModelConfig,
    bags: list[Bag],
    variant: Variant,
    lambda_p: float,
    phase: Phase = Phase.JOINT,
) -> LossBundle:
    main, gene = init_params(config, seed=0)
    tape = Tape()
    return build_batch_objective(
        tape, main.bind(tape), gene.bind(tape), bags, config, variant, lambda_p, phase=phase
    )


class TestBatchObjective:
    """Tests for build_batch_objective()."""

    def test_full_mixes_siamese_and_dann(
        self, tiny_model_config: ModelConfig, tiny_dataset: Dataset
    ) -> None:
        """L_TOT = (1 - lambda_p) L_S + lambda_p (L_y + L_d)."""
        bags = list(tiny_dataset.bags[:5])
        bundle = _objective(tiny_model_config, bags, Variant.FULL, 0.3)
        expected = 0.7 * bundle.L_S + 0.3 * (bundle.L_y + bundle.L_d)
        assert bundle.L_TOT == pytest.approx(expected, abs=1e-12)
        assert -1.0 <= bundle.L_S <= 1.0
        assert bundle.L_D == pytest.approx(bundle.L_y + bundle.L_d, abs=1e-12)

    @pytest.mark.parametrize(
        ("lambda_p", "silent"),
        [
            (0.0, ("gy_W", "gy_b", "gd_W", "gd_b")),
            (1.0, ("head_W1", "head_b1", "head_W2", "head_b2")),
        ],
    )
    def test_endpoint_lambda_silences_branches(
        self,
        tiny_model_config: ModelConfig,
        tiny_dataset: Dataset,
        lambda_p: float,
        silent: tuple[str, ...],
    ) -> None:
        """lambda_p = 0 gives G_y and G_d no gradient; lambda_p = 1 gives head h none."""
        main, gene = init_params(tiny_model_config, seed=0)
        tape = Tape()
        leaves = main.bind(tape)
        bags = list(tiny_dataset.bags[:5])
        bundle = build_batch_objective(
            tape, leaves, gene.bind(tape), bags, tiny_model_config, Variant.FULL, lambda_p
        )
        backward(tape, bundle.total)
        for name in silent:
            assert np.all(leaves[name].grad == 0.0), name
        assert np.abs(leaves["fc_W"].grad).max() > 0.0

    def test_baseline_is_subtype_loss_only(
        self, tiny_model_config: ModelConfig, tiny_dataset: Dataset
    ) -> None:
        bags = list(tiny_dataset.bags[:4])
        bundle = _objective(tiny_model_config.with_prompts(0), bags, Variant.BASELINE, 0.5)
        assert bundle.L_TOT == bundle.L_y
        assert math.isnan(bundle.L_S)
        assert math.isnan(bundle.L_d)

    def test_siamese_only_mixes_with_subtype_loss(
        self, tiny_model_config: ModelConfig, tiny_dataset: Dataset
    ) -> None:
        bags = list(tiny_dataset.bags[:4])
        bundle = _objective(tiny_model_config.with_prompts(0), bags, Variant.SIAMESE, 0.4)
        assert bundle.L_TOT == pytest.approx(0.6 * bundle.L_S + 0.4 * bundle.L_y, abs=1e-12)
        assert math.isnan(bundle.L_d)

    def test_dann_only_sums_terms(
        self, tiny_model_config: ModelConfig, tiny_dataset: Dataset
    ) -> None:
        bags = list(tiny_dataset.bags[:4])
        bundle = _objective(tiny_model_config.with_prompts(0), bags, Variant.DANN, 0.4)
        assert bundle.L_TOT == pytest.approx(bundle.L_y + bundle.L_d, abs=1e-12)

    def test_phases_select_terms(
        self, tiny_model_config: ModelConfig, tiny_dataset: Dataset
    ) -> None:
        bags = list(tiny_dataset.bags[:4])
        siamese = _objective(tiny_model_config, bags, Variant.FULL, 0.4, phase=Phase.SIAMESE)
        assert siamese.L_TOT == siamese.L_S
        assert math.isnan(siamese.L_y)
        adversarial = _objective(
            tiny_model_config, bags, Variant.FULL, 0.4, phase=Phase.ADVERSARIAL
        )
        assert adversarial.L_TOT == pytest.approx(adversarial.L_y + adversarial.L_d, abs=1e-12)
        assert math.isnan(adversarial.L_S)

    def test_prompts_require_prompt_variant(
        self, tiny_model_config: ModelConfig, tiny_dataset: Dataset
    ) -> None:
        with pytest.raises(ContractError):
            _objective(tiny_model_config, list(tiny_dataset.bags[:2]), Variant.BASELINE, 0.1)

    def test_missing_gene_vector(
        self, tiny_model_config: ModelConfig, tiny_dataset: Dataset
    ) -> None:
        """The Siamese term cannot be formed for a bag without genes."""
        bags = [tiny_dataset.bags[0], tiny_dataset.bags[1].without_genes()]
        with pytest.raises(DataError):
            _objective(tiny_model_config, bags, Variant.FULL, 0.1)

    def test_siamese_phase_needs_siamese_variant(
        self, tiny_model_config: ModelConfig, tiny_dataset: Dataset
    ) -> None:
        with pytest.raises(ContractError):
            _objective(
                tiny_model_config.with_prompts(0),
                list(tiny_dataset.bags[:2]),
                Variant.DANN,
                0.1,
                phase=Phase.SIAMESE,
            )

    def test_empty_batch(self, tiny_model_config: ModelConfig) -> None:
        with pytest.raises(ContractError):
            _objective(tiny_model_config, [], Variant.FULL, 0.1)


# =============================================================================
# Gene pretraining
# =============================================================================


class TestGenePretraining:
    """Tests for pretrain_gene()."""

    def test_returns_frozen_params(
        self,
        tiny_dataset: Dataset,
        tiny_split: SplitPlan,
        fast_train_config: TrainConfig,
        tiny_architecture: ArchitectureConfig,
    ) -> None:
        gene = pretrain_gene(tiny_dataset, tiny_split, 0, fast_train_config, tiny_architecture)
        assert gene.frozen
        assert gene["gene_W"].shape == (6, 6)

    def test_is_deterministic(
        self,
        tiny_dataset: Dataset,
        tiny_split: SplitPlan,
        fast_train_config: TrainConfig,
        tiny_architecture: ArchitectureConfig,
    ) -> None:
        a = pretrain_gene(tiny_dataset, tiny_split, 1, fast_train_config, tiny_architecture)
        b = pretrain_gene(tiny_dataset, tiny_split, 1, fast_train_config, tiny_architecture)
        assert a.same_as(b)

    def test_missing_genes_raise(
        self, tiny_dataset: Dataset, tiny_split: SplitPlan, fast_train_config: TrainConfig
    ) -> None:
        stripped = Dataset(
            bags=tuple(bag.without_genes() for bag in tiny_dataset),
            num_domains=tiny_dataset.num_domains,
        )
        with pytest.raises(DataError):
            pretrain_gene(stripped, tiny_split, 0, fast_train_config)


# =============================================================================
# Main-branch loops
# =============================================================================


@pytest.fixture
def frozen_gene(
    tiny_dataset: Dataset,
    tiny_split: SplitPlan,
    fast_train_config: TrainConfig,
    tiny_architecture: ArchitectureConfig,
) -> GeneParams:
    return pretrain_gene(tiny_dataset, tiny_split, 0, fast_train_config, tiny_architecture)


class TestOneStage:
    """Tests for train_one_stage()."""

    def test_gene_params_stay_bitwise_unchanged(
        self,
        tiny_dataset: Dataset,
        tiny_split: SplitPlan,
        fast_train_config: TrainConfig,
        tiny_architecture: ArchitectureConfig,
        frozen_gene: GeneParams,
    ) -> None:
        """Main-branch training must not touch the frozen gene encoder."""
        snapshot = frozen_gene.copy()
        main, history = train_one_stage(
            tiny_dataset, tiny_split, 0, frozen_gene, fast_train_config, tiny_architecture
        )
        assert frozen_gene.same_as(snapshot)
        assert isinstance(main, MainParams)
        assert main.config.n_prompts == 2
        assert 1 <= len(history) <= fast_train_config.max_epochs
        assert history.best_epoch is not None

    def test_schedule_starts_at_zero(
        self,
        tiny_dataset: Dataset,
        tiny_split: SplitPlan,
        fast_train_config: TrainConfig,
        tiny_architecture: ArchitectureConfig,
        frozen_gene: GeneParams,
    ) -> None:
        config = fast_train_config.with_overrides(max_epochs=3)
        _, history = train_one_stage(
            tiny_dataset, tiny_split, 0, frozen_gene, config, tiny_architecture
        )
        lambdas = history.column("lambda_p")
        assert lambdas[0] == 0.0
        assert lambdas == sorted(lambdas)
        assert lambdas == [lambda_schedule(e, config.schedule()) for e in range(len(lambdas))]
        assert all(record.phase == "joint" for record in history.records)

    def test_training_is_deterministic(
        self,
        tiny_dataset: Dataset,
        tiny_split: SplitPlan,
        fast_train_config: TrainConfig,
        tiny_architecture: ArchitectureConfig,
        frozen_gene: GeneParams,
    ) -> None:
        a, history_a = train_one_stage(
            tiny_dataset, tiny_split, 0, frozen_gene, fast_train_config, tiny_architecture
        )
        b, history_b = train_one_stage(
            tiny_dataset, tiny_split, 0, frozen_gene, fast_train_config, tiny_architecture
        )
        assert a.same_as(b)
        assert history_a.column("L_TOT") == history_b.column("L_TOT")

    def test_siamese_variant_needs_gene_params(
        self,
        tiny_dataset: Dataset,
        tiny_split: SplitPlan,
        fast_train_config: TrainConfig,
        tiny_params: tuple[MainParams, GeneParams],
    ) -> None:
        with pytest.raises(ContractError):
            train_one_stage(tiny_dataset, tiny_split, 0, None, fast_train_config)
        _, unfrozen = tiny_params
        with pytest.raises(ContractError):
            train_one_stage(tiny_dataset, tiny_split, 0, unfrozen, fast_train_config)

    def test_baseline_runs_without_genes(
        self,
        tiny_dataset: Dataset,
        tiny_split: SplitPlan,
        fast_train_config: TrainConfig,
        tiny_architecture: ArchitectureConfig,
    ) -> None:
        """Variants without the Siamese term train on bags without gene vectors."""
        stripped = Dataset(
            bags=tuple(bag.without_genes() for bag in tiny_dataset),
            num_domains=tiny_dataset.num_domains,
        )
        config = fast_train_config.with_overrides(variant=Variant.DANN, max_epochs=1)
        main, history = train_one_stage(
            stripped, tiny_split, 0, None, config, tiny_architecture
        )
        assert main.config.n_prompts == 0
        assert math.isnan(history.records[0].L_S)


class TestTwoStage:
    """Tests for train_two_stage()."""

    def test_phases_and_restarted_schedule(
        self,
        tiny_dataset: Dataset,
        tiny_split: SplitPlan,
        fast_train_config: TrainConfig,
        tiny_architecture: ArchitectureConfig,
        frozen_gene: GeneParams,
    ) -> None:
        """Phase A runs at lambda_p = 0; phase B restarts the schedule and the epoch count."""
        config = fast_train_config.with_overrides(max_epochs=4, stage_mode=StageMode.TWO)
        snapshot = frozen_gene.copy()
        _, history = train_main(
            tiny_dataset, tiny_split, 0, frozen_gene, config, tiny_architecture
        )
        phases = [record.phase for record in history.records]
        assert phases == ["siamese", "siamese", "adversarial", "adversarial"]
        assert [record.epoch for record in history.records] == [0, 1, 2, 3]
        assert history.column("lambda_p")[:3] == [0.0, 0.0, 0.0]
        assert history.column("lambda_p")[3] > 0.0
        phase_b = [lambda_schedule(e, config.schedule(2)) for e in range(2)]
        assert history.column("lambda_p")[2:] == phase_b
        assert history.best_epoch in (2, 3)
        assert frozen_gene.same_as(snapshot)

    def test_needs_siamese_variant(
        self, tiny_dataset: Dataset, tiny_split: SplitPlan, fast_train_config: TrainConfig
    ) -> None:
        config = fast_train_config.with_overrides(variant=Variant.PROMPTS)
        with pytest.raises(ContractError):
            train_two_stage(tiny_dataset, tiny_split, 0, None, config)

    def test_single_epoch_budget_is_rejected(
        self,
        tiny_dataset: Dataset,
        tiny_split: SplitPlan,
        fast_train_config: TrainConfig,
        frozen_gene: GeneParams,
    ) -> None:
        """Two phases cannot share one epoch without exceeding max_epochs."""
        config = fast_train_config.with_overrides(max_epochs=1, stage_mode=StageMode.TWO)
        with pytest.raises(ContractError, match="max_epochs"):
            train_main(tiny_dataset, tiny_split, 0, frozen_gene, config)

    @pytest.mark.parametrize("max_epochs", [2, 3, 5])
    def test_never_exceeds_budget(
        self,
        tiny_dataset: Dataset,
        tiny_split: SplitPlan,
        fast_train_config: TrainConfig,
        tiny_architecture: ArchitectureConfig,
        frozen_gene: GeneParams,
        max_epochs: int,
    ) -> None:
        config = fast_train_config.with_overrides(
            max_epochs=max_epochs, early_stop_patience=50, stage_mode=StageMode.TWO
        )
        _, history = train_main(
            tiny_dataset, tiny_split, 0, frozen_gene, config, tiny_architecture
        )
        assert len(history) == max_epochs
        assert history.records[-1].phase == "adversarial"

    def test_each_phase_reaches_only_its_heads(
        self,
        tiny_dataset: Dataset,
        tiny_split: SplitPlan,
        fast_train_config: TrainConfig,
        tiny_architecture: ArchitectureConfig,
        frozen_gene: GeneParams,
    ) -> None:
        """Phase A leaves G_y and G_d bitwise unchanged; phase B leaves head h unchanged."""
        config = fast_train_config.with_overrides(stage_mode=StageMode.TWO)
        runner = _prepare(tiny_dataset, tiny_split, 0, frozen_gene, config, tiny_architecture)
        classifiers = ("gy_W", "gy_b", "gd_W", "gd_b")
        head = ("head_W1", "head_b1", "head_W2", "head_b2")

        before = runner.main.copy()
        runner.train_epoch(0.0, Phase.SIAMESE)
        assert all(runner.main[n].tobytes() == before[n].tobytes() for n in classifiers)
        assert runner.main["head_W1"].tobytes() != before["head_W1"].tobytes()

        before = runner.main.copy()
        runner.train_epoch(0.5, Phase.ADVERSARIAL)
        assert all(runner.main[n].tobytes() == before[n].tobytes() for n in head)
        assert runner.main["gy_W"].tobytes() != before["gy_W"].tobytes()
        assert runner.main["gd_W"].tobytes() != before["gd_W"].tobytes()


class TestAblationEntry:
    """Tests for train_ablation() and model_config_for()."""

    def test_pretrains_gene_for_siamese_variants(
        self,
        tiny_dataset: Dataset,
        tiny_split: SplitPlan,
        fast_train_config: TrainConfig,
        tiny_architecture: ArchitectureConfig,
    ) -> None:
        config = fast_train_config.with_overrides(max_epochs=1)
        main, history = train_ablation(
            "+siamese", tiny_dataset, tiny_split, 0, config, tiny_architecture
        )
        assert main.config.n_prompts == 0
        assert not math.isnan(history.records[0].L_S)

    def test_unknown_variant(
        self, tiny_dataset: Dataset, tiny_split: SplitPlan, fast_train_config: TrainConfig
    ) -> None:
        with pytest.raises(ContractError):
            train_ablation("+everything", tiny_dataset, tiny_split, 0, fast_train_config)

    def test_model_config_for(self, tiny_dataset: Dataset) -> None:
        architecture = ArchitectureConfig(n_prompts=3)
        assert model_config_for(tiny_dataset, Variant.FULL, architecture).n_prompts == 3
        assert model_config_for(tiny_dataset, Variant.SIAMESE_DANN, architecture).n_prompts == 0


# =============================================================================
# History and early stopping
# =============================================================================


class TestEarlyStopping:
    """Tests for EarlyStopping."""

    def test_patience(self) -> None:
        stopper = EarlyStopping(patience=2)
        assert stopper.update(0, 0.5)
        assert not stopper.update(1, 0.4)
        assert not stopper.should_stop
        assert not stopper.update(2, 0.5)
        assert stopper.should_stop
        assert stopper.best_epoch == 0

    def test_nan_never_improves(self) -> None:
        stopper = EarlyStopping(patience=1)
        assert not stopper.update(0, float("nan"))
        assert stopper.best_epoch is None

    def test_min_mode(self) -> None:
        stopper = EarlyStopping(patience=3, mode="min")
        stopper.update(0, 1.0)
        assert stopper.update(1, 0.2)
        assert stopper.best == 0.2


class TestTrainingHistory:
    """Tests for TrainingHistory."""

    def test_csv_round_trip(self, tmp_path: Path) -> None:
        history = TrainingHistory()
        for epoch in range(3):
            history.append(
                EpochRecord(
                    epoch=epoch,
                    lambda_p=epoch / 7,
                    L_S=-0.1 * epoch,
                    L_y=1.0 / (epoch + 3),
                    L_d=float("nan"),
                    L_TOT=np.pi * epoch,
                    val_rocauc=0.5,
                    val_acc=0.25,
                )
            )
        path = history.write_csv(tmp_path / "history.csv")
        restored = TrainingHistory.read_csv(path)
        assert restored.column("lambda_p") == history.column("lambda_p")
        assert restored.column("L_TOT") == history.column("L_TOT")
        assert all(math.isnan(value) for value in restored.column("L_d"))
