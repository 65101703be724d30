"""Adam with bias correction and optional decoupled weight decay."""

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from src.errors import ContractError, TrainingError
from src.gradcore import Tensor
from src.models import ParamStore
from src.train.config import TrainConfig


@dataclass
class AdamState:
    """Per-parameter moments and step counters.

    Attributes:
        m: First-moment estimates.
        v: Second-moment estimates.
        t: Number of updates applied to each parameter.
    """

    m: dict[str, Tensor] = field(default_factory=dict)
    v: dict[str, Tensor] = field(default_factory=dict)
    t: dict[str, int] = field(default_factory=dict)


def adam_step(
    params: ParamStore,
    grads: Mapping[str, Tensor],
    state: AdamState,
    config: TrainConfig,
    *,
    lr: float | None = None,
    l2: float = 0.0,
) -> None:
    """Apply one Adam update to the parameters named in ``grads``.

    Parameters without a gradient keep their values and their moments. ``l2`` adds
    ``l2 * value`` to each gradient before the moment updates, on top of the
    configured weight decay.

    Raises:
        ContractError: If ``params`` is frozen.
        TrainingError: If a gradient is not finite; no parameter is updated then.
    """
    if params.frozen:
        raise ContractError(f"cannot run an optimizer step on frozen {params.branch} parameters")
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise TrainingError(f"non-finite gradient for parameter {params.branch}.{name}")

    rate = config.lr if lr is None else lr
    b1, b2, wd = config.beta1, config.beta2, config.weight_decay
    for name, grad in grads.items():
        value = params[name]
        g = grad + l2 * value if l2 else grad
        if not config.decoupled_weight_decay:
            g = g + wd * value
        t = state.t.get(name, 0) + 1
        m = b1 * state.m.get(name, np.zeros_like(value)) + (1.0 - b1) * g
        v = b2 * state.v.get(name, np.zeros_like(value)) + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        updated = value - rate * m_hat / (np.sqrt(v_hat) + config.eps)
        if config.decoupled_weight_decay:
            updated = updated - rate * wd * value
        params.update(name, updated)
        state.m[name], state.v[name], state.t[name] = m, v, t
