"""Warm-up schedule for the adversarial / mixing weight lambda_p."""

import math

from pydantic import BaseModel, ConfigDict, Field

from src.errors import ContractError


class Schedule(BaseModel):
    """Progress schedule: p = epoch / max_epochs, lambda_p = 2 / (1 + exp(-gamma p)) - 1.

    Attributes:
        gamma: Steepness of the warm-up.
        max_epochs: Epoch count at which p reaches 1.
    """

    model_config = ConfigDict(frozen=True)

    gamma: float = Field(default=10.0, gt=0)
    max_epochs: int = Field(default=100, ge=1)


def lambda_schedule(epoch: int, sched: Schedule) -> float:
    """Return lambda_p for ``epoch``.

    Evaluated as ``tanh(gamma * p / 2)``, which equals ``2 / (1 + exp(-gamma p)) - 1``
    without the cancellation near p = 0.

    Raises:
        ContractError: If ``epoch`` is outside ``[0, max_epochs]``.
    """
    if not 0 <= epoch <= sched.max_epochs:
        raise ContractError(f"epoch {epoch} outside [0, {sched.max_epochs}]")
    progress = epoch / sched.max_epochs
    return math.tanh(sched.gamma * progress / 2.0)
