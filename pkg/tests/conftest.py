"""Pytest configuration and fixtures for bagforge tests.

Model and data fixtures are deliberately tiny (d=8, G=6, emb=6) so that
training loops run in well under a second.
"""

from collections.abc import Generator

import numpy as np
import pytest

from src.cli.config import get_settings
from src.data import Dataset, GenConfig, SplitPlan, build_split_plan, generate
from src.models import (
    ArchitectureConfig,
    Bag,
    GeneParams,
    MainParams,
    ModelConfig,
    init_params,
)
from src.train import TrainConfig

# =============================================================================
# Settings Fixtures
# =============================================================================


@pytest.fixture(autouse=True)
def clear_settings_cache() -> Generator[None, None, None]:
    """Clear the cached Settings before and after each test."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


# =============================================================================
# Data Fixtures
# =============================================================================


@pytest.fixture
def tiny_gen_config() -> GenConfig:
    """Generator config: 60 bags of 3-6 instances, 3 origins."""
    return GenConfig(
        num_samples=60,
        num_domains=3,
        d=8,
        G=6,
        bag_size_range=(3, 6),
        subtype_signal=3.0,
        domain_signal=1.0,
        seed=0,
    )


@pytest.fixture
def tiny_dataset(tiny_gen_config: GenConfig) -> Dataset:
    return generate(tiny_gen_config)


@pytest.fixture
def tiny_split(tiny_dataset: Dataset) -> SplitPlan:
    """15% hold-out test set and three folds."""
    return build_split_plan(tiny_dataset, test_fraction=0.15, k=3, seed=0)


@pytest.fixture
def sample_bag() -> Bag:
    """A single bag with five instances and a gene vector."""
    rng = np.random.default_rng(11)
    return Bag.create("bag-1", rng.standard_normal((5, 8)), 2, 1, rng.standard_normal(6))


# =============================================================================
# Model Fixtures
# =============================================================================


@pytest.fixture
def tiny_architecture() -> ArchitectureConfig:
    return ArchitectureConfig(n_prompts=2, emb=6, hidden_att=4)


@pytest.fixture
def tiny_model_config(tiny_architecture: ArchitectureConfig) -> ModelConfig:
    """Model config matching the tiny dataset widths."""
    return ModelConfig(**tiny_architecture.model_dump(), d=8, num_domains=3, gene_dim=6)


@pytest.fixture
def tiny_params(tiny_model_config: ModelConfig) -> tuple[MainParams, GeneParams]:
    return init_params(tiny_model_config, seed=0)


# =============================================================================
# Training Fixtures
# =============================================================================


@pytest.fixture
def fast_train_config() -> TrainConfig:
    """Two epochs with a large learning rate."""
    return TrainConfig(
        lr=1e-2,
        max_epochs=2,
        early_stop_patience=5,
        batch_size=8,
        gene_lr=1e-2,
        gene_max_epochs=2,
        seed=0,
    )
