"""Tests for src/train/optimizer.py and src/train/config.py."""

import numpy as np
import pytest
from pydantic import ValidationError

from src.errors import ContractError, TrainingError
from src.models import GeneParams, MainParams
from src.train import AdamState, StageMode, TrainConfig, Variant, adam_step


def _reference_adam(value, grads, lr, b1=0.9, b2=0.999, eps=1e-8):  # type: ignore[no-untyped-def]
    m = np.zeros_like(value)
    v = np.zeros_like(value)
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        value = value - lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
    return value


class TestAdam:
    """Tests for adam_step()."""

    def test_first_step_moves_by_lr(self, tiny_params: tuple[MainParams, GeneParams]) -> None:
        """With bias correction the first step is lr * sign(g) up to eps."""
        main, _ = tiny_params
        before = main["gy_W"].copy()
        grad = np.random.default_rng(0).standard_normal(before.shape)
        config = TrainConfig(lr=1e-2, weight_decay=0.0)
        adam_step(main, {"gy_W": grad}, AdamState(), config)
        expected = before - 1e-2 * grad / (np.abs(grad) + 1e-8)
        assert np.allclose(main["gy_W"], expected, atol=1e-15)
        assert np.allclose(main["gy_W"] - before, -1e-2 * np.sign(grad), atol=1e-4)

    def test_matches_reference_over_steps(
        self, tiny_params: tuple[MainParams, GeneParams]
    ) -> None:
        main, _ = tiny_params
        rng = np.random.default_rng(1)
        start = main["fc_W"].copy()
        grads = [rng.standard_normal(start.shape) for _ in range(5)]
        config = TrainConfig(lr=3e-3, weight_decay=0.0)
        state = AdamState()
        for grad in grads:
            adam_step(main, {"fc_W": grad}, state, config)
        assert np.allclose(main["fc_W"], _reference_adam(start, grads, 3e-3), atol=1e-14)
        assert state.t["fc_W"] == 5

    def test_untouched_parameters_keep_moments(
        self, tiny_params: tuple[MainParams, GeneParams]
    ) -> None:
        """Parameters missing from the gradient dict are not updated at all."""
        main, _ = tiny_params
        before = main["V"].copy()
        state = AdamState()
        adam_step(main, {"w": np.ones((4, 1))}, state, TrainConfig())
        assert main["V"].tobytes() == before.tobytes()
        assert "V" not in state.t

    def test_decoupled_weight_decay_shrinks(
        self, tiny_params: tuple[MainParams, GeneParams]
    ) -> None:
        """A zero gradient with decoupled decay shrinks weights by lr * wd."""
        main, _ = tiny_params
        before = main["gd_W"].copy()
        config = TrainConfig(lr=0.1, weight_decay=0.5)
        adam_step(main, {"gd_W": np.zeros_like(before)}, AdamState(), config)
        assert np.allclose(main["gd_W"], before * (1.0 - 0.05), atol=1e-15)

    def test_coupled_weight_decay_enters_gradient(
        self, tiny_params: tuple[MainParams, GeneParams]
    ) -> None:
        main, _ = tiny_params
        before = main["gd_W"].copy()
        config = TrainConfig(lr=0.1, weight_decay=0.5, decoupled_weight_decay=False)
        adam_step(main, {"gd_W": np.zeros_like(before)}, AdamState(), config)
        grad = 0.5 * before
        expected = before - 0.1 * grad / (np.abs(grad) + 1e-8)
        assert np.allclose(main["gd_W"], expected, atol=1e-15)

    def test_l2_pull_enters_gradient(self, tiny_params: tuple[MainParams, GeneParams]) -> None:
        """``l2`` adds ``l2 * value`` to the gradient and scales with its own rate."""
        main, _ = tiny_params
        before = main["gd_W"].copy()
        config = TrainConfig(lr=0.1, weight_decay=0.0)
        adam_step(main, {"gd_W": np.zeros_like(before)}, AdamState(), config, lr=0.2, l2=0.3)
        grad = 0.3 * before
        expected = before - 0.2 * grad / (np.abs(grad) + 1e-8)
        assert np.allclose(main["gd_W"], expected, atol=1e-15)

    def test_non_finite_gradient_aborts_without_update(
        self, tiny_params: tuple[MainParams, GeneParams]
    ) -> None:
        main, _ = tiny_params
        snapshot = main.copy()
        bad = np.ones(main["w"].shape)
        bad[0, 0] = np.nan
        with pytest.raises(TrainingError):
            adam_step(main, {"V": np.ones(main["V"].shape), "w": bad}, AdamState(), TrainConfig())
        assert main.same_as(snapshot)

    def test_frozen_store_rejected(self, tiny_params: tuple[MainParams, GeneParams]) -> None:
        _, gene = tiny_params
        gene.freeze()
        with pytest.raises(ContractError):
            adam_step(gene, {"gene_b": np.ones((1, 6))}, AdamState(), TrainConfig())

    def test_converges_on_quadratic(self, tiny_params: tuple[MainParams, GeneParams]) -> None:
        """Minimizing ||x - target||^2 should approach the target."""
        main, _ = tiny_params
        target = np.full(main["gy_b"].shape, 0.7)
        state = AdamState()
        config = TrainConfig(lr=0.05, weight_decay=0.0)
        for _ in range(500):
            adam_step(main, {"gy_b": 2.0 * (main["gy_b"] - target)}, state, config)
        assert np.allclose(main["gy_b"], target, atol=1e-2)


class TestTrainConfig:
    """Tests for TrainConfig, Variant and StageMode."""

    def test_defaults(self) -> None:
        config = TrainConfig()
        assert config.lr == 5e-5
        assert config.weight_decay == 1e-5
        assert config.variant is Variant.FULL
        assert config.stage_mode is StageMode.ONE
        assert config.pretrain_lr == config.lr
        assert config.pretrain_epochs == config.max_epochs
        assert config.domain_lr_scale == 10.0
        assert config.domain_l2 == 0.1

    def test_strings_are_parsed(self) -> None:
        config = TrainConfig.model_validate({"variant": "+siamese+dann", "stage_mode": "two-stage"})
        assert config.variant is Variant.SIAMESE_DANN
        assert config.stage_mode is StageMode.TWO

    def test_with_overrides(self) -> None:
        config = TrainConfig().with_overrides(variant="baseline-abmil", gamma=5.0)
        assert config.variant is Variant.BASELINE
        assert config.schedule().gamma == 5.0
        with pytest.raises(ValidationError):
            TrainConfig().with_overrides(lr=-1.0)

    def test_unknown_variant(self) -> None:
        with pytest.raises(ContractError):
            Variant.from_string("everything")

    @pytest.mark.parametrize(
        ("variant", "prompts", "siamese", "dann"),
        [
            (Variant.BASELINE, False, False, False),
            (Variant.SIAMESE, False, True, False),
            (Variant.DANN, False, False, True),
            (Variant.SIAMESE_DANN, False, True, True),
            (Variant.PROMPTS, True, False, False),
            (Variant.FULL, True, True, True),
        ],
    )
    def test_variant_components(
        self, variant: Variant, prompts: bool, siamese: bool, dann: bool
    ) -> None:
        assert (variant.use_prompts, variant.use_siamese, variant.use_dann) == (
            prompts,
            siamese,
            dann,
        )
