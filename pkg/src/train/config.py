"""Training configuration, model variants and stage modes."""

from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.errors import ContractError
from src.losses import Schedule


class Variant(str, Enum):
    """Ablation variants, from plain ABMIL to the full model."""

    BASELINE = "baseline"
    SIAMESE = "+siamese"
    DANN = "+dann"
    SIAMESE_DANN = "+siamese+dann"
    PROMPTS = "+prompts"
    FULL = "full"

    @classmethod
    def from_string(cls, value: str) -> "Variant":
        """Parse a variant name; ``baseline-abmil`` is accepted for the baseline.

        Raises:
            ContractError: If the name is unknown.
        """
        normalized = value.lower().strip()
        if normalized == "baseline-abmil":
            return cls.BASELINE
        try:
            return cls(normalized)
        except ValueError as err:
            choices = ", ".join(variant.value for variant in cls)
            raise ContractError(f"Unknown variant: {value} (choose from {choices})") from err

    @property
    def use_prompts(self) -> bool:
        return self in (Variant.PROMPTS, Variant.FULL)

    @property
    def use_siamese(self) -> bool:
        return self in (Variant.SIAMESE, Variant.SIAMESE_DANN, Variant.FULL)

    @property
    def use_dann(self) -> bool:
        return self in (Variant.DANN, Variant.SIAMESE_DANN, Variant.FULL)


# The five rows of the ablation table; FULL is added on request.
ABLATION_VARIANTS = (
    Variant.BASELINE,
    Variant.SIAMESE,
    Variant.DANN,
    Variant.SIAMESE_DANN,
    Variant.PROMPTS,
)


class StageMode(str, Enum):
    """Joint optimization (one) or Siamese-then-adversarial phases (two)."""

    ONE = "one"
    TWO = "two"

    @classmethod
    def from_string(cls, value: str) -> "StageMode":
        normalized = value.lower().strip().removesuffix("-stage")
        try:
            return cls(normalized)
        except ValueError as err:
            raise ContractError(f"Unknown stage mode: {value}") from err


class TrainConfig(BaseModel):
    """Optimizer and loop settings.

    Attributes:
        lr: Adam learning rate for the main branch.
        weight_decay: Weight decay coefficient.
        decoupled_weight_decay: Apply decay to the parameters directly (True) or
            add it to the gradient as an L2 term (False).
        max_epochs: Epoch budget (the schedule's progress denominator).
        early_stop_patience: Epochs without improvement before stopping.
        batch_size: Bags per optimizer step.
        gamma: Steepness of the lambda_p schedule.
        stage_mode: One-stage or two-stage training.
        variant: Ablation variant.
        seed: Base seed; fold ``f`` uses ``seed + f``.
        gene_lr: Learning rate for gene pretraining (defaults to ``lr``).
        gene_max_epochs: Epoch budget for gene pretraining (defaults to ``max_epochs``).
        beta1: Adam first-moment decay.
        beta2: Adam second-moment decay.
        eps: Adam denominator offset.
        domain_lr_scale: Learning-rate multiplier for the domain classifier G_d.
        domain_l2: L2 coefficient added to the G_d gradients; keeps the domain
            classifier from saturating on separable features.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    lr: float = Field(default=5e-5, gt=0)
    weight_decay: float = Field(default=1e-5, ge=0)
    decoupled_weight_decay: bool = True
    max_epochs: int = Field(default=100, ge=1)
    early_stop_patience: int = Field(default=10, ge=1)
    batch_size: int = Field(default=16, ge=1)
    gamma: float = Field(default=10.0, gt=0)
    stage_mode: StageMode = StageMode.ONE
    variant: Variant = Variant.FULL
    seed: int = 0
    gene_lr: float | None = Field(default=None, gt=0)
    gene_max_epochs: int | None = Field(default=None, ge=1)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)
    domain_lr_scale: float = Field(default=10.0, gt=0)
    domain_l2: float = Field(default=0.1, ge=0)

    @field_validator("variant", mode="before")
    @classmethod
    def parse_variant(cls, v: Any) -> Any:
        return Variant.from_string(v) if isinstance(v, str) else v

    @field_validator("stage_mode", mode="before")
    @classmethod
    def parse_stage_mode(cls, v: Any) -> Any:
        return StageMode.from_string(v) if isinstance(v, str) else v

    @property
    def pretrain_lr(self) -> float:
        return self.gene_lr if self.gene_lr is not None else self.lr

    @property
    def pretrain_epochs(self) -> int:
        return self.gene_max_epochs if self.gene_max_epochs is not None else self.max_epochs

    def schedule(self, max_epochs: int | None = None) -> Schedule:
        return Schedule(gamma=self.gamma, max_epochs=max_epochs or self.max_epochs)

    def with_overrides(self, **changes: Any) -> "TrainConfig":
        """Return a validated copy with some fields replaced."""
        return TrainConfig.model_validate({**self.model_dump(), **changes})
