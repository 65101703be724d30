"""Parameter stores for the main (WSI) branch and the gene branch.

Stored arrays are immutable; optimizers replace them rather than writing in place,
so a ``copy()`` is a cheap and exact snapshot.
"""

import math
from abc import ABC, abstractmethod
from collections.abc import Iterator, Mapping
from typing import ClassVar

try:
    from typing import Self
except ImportError:  # Python < 3.11
    from typing_extensions import Self

import numpy as np
from numpy.typing import ArrayLike

from src.errors import ContractError, ShapeError
from src.gradcore import Node, Tape, Tensor, as_tensor
from src.models.config import ModelConfig

PROMPT_INIT_STD = 0.02

# Domain classifier G_d, updated on its own faster and regularized schedule.
DOMAIN_HEAD = frozenset({"gd_W", "gd_b"})

# Prompts and attention pool, upstream of F_c; the gradient reversal stops before them.
POOL_PARAMS = frozenset({"prompts", "V", "w", "U"})


class ParamStore(ABC):
    """Named trainable tensors of one branch.

    Attributes:
        config: Model configuration the shapes derive from.
        frozen: Once True, ``update`` refuses every write.
    """

    branch: ClassVar[str] = "base"

    def __init__(
        self, config: ModelConfig, values: Mapping[str, ArrayLike], *, frozen: bool = False
    ) -> None:
        self.config = config
        self.frozen = frozen
        layout = self.layout(config)
        if set(values) != set(layout):
            raise ContractError(
                f"{self.branch} params mismatch: expected {sorted(layout)}, got {sorted(values)}"
            )
        self._values: dict[str, Tensor] = {}
        for name, shape in layout.items():
            tensor = as_tensor(values[name]) if shape[0] else np.zeros(shape)
            if tensor.shape != shape:
                raise ShapeError(f"{self.branch}.{name}: expected {shape}, got {tensor.shape}")
            tensor.setflags(write=False)
            self._values[name] = tensor

    @classmethod
    @abstractmethod
    def layout(cls, config: ModelConfig) -> dict[str, tuple[int, int]]:
        """Parameter names and shapes for ``config``."""

    @property
    def names(self) -> list[str]:
        return list(self._values)

    def __getitem__(self, name: str) -> Tensor:
        return self._values[name]

    def __contains__(self, name: object) -> bool:
        return name in self._values

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def items(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self._values.items())

    def update(self, name: str, value: ArrayLike) -> None:
        """Replace one parameter.

        Raises:
            ContractError: If the store is frozen or the name is unknown.
            ShapeError: If the new value has a different shape.
        """
        if self.frozen:
            raise ContractError(f"{self.branch} params are frozen; refusing to update {name!r}")
        if name not in self._values:
            raise ContractError(f"unknown {self.branch} parameter {name!r}")
        tensor = as_tensor(value)
        if tensor.shape != self._values[name].shape:
            raise ShapeError(
                f"{self.branch}.{name}: expected {self._values[name].shape}, got {tensor.shape}"
            )
        self._values[name] = tensor

    def freeze(self) -> None:
        self.frozen = True

    def bind(self, tape: Tape) -> dict[str, Node]:
        """Record every parameter as a named leaf on ``tape``."""
        return {name: tape.leaf(value, name=name) for name, value in self._values.items()}

    def copy(self) -> Self:
        return type(self)(self.config, self._values, frozen=self.frozen)

    def same_as(self, other: "ParamStore") -> bool:
        """Bitwise equality of names, shapes and values."""
        if self.names != other.names:
            return False
        return all(
            self[name].shape == other[name].shape and self[name].tobytes() == other[name].tobytes()
            for name in self.names
        )

    def __repr__(self) -> str:
        state = "frozen" if self.frozen else "trainable"
        return f"{type(self).__name__}({len(self._values)} tensors, {state})"


class MainParams(ParamStore):
    """Prompts, attention pool, shared extractor F_c, Siamese head h, G_y and G_d."""

    branch = "main"

    @classmethod
    def layout(cls, config: ModelConfig) -> dict[str, tuple[int, int]]:
        shapes = {
            "prompts": (config.n_prompts, config.d),
            "V": (config.hidden_att, config.d),
            "w": (config.hidden_att, 1),
            "fc_W": (config.d, config.emb),
            "fc_b": (1, config.emb),
            "head_W1": (config.emb, config.emb),
            "head_b1": (1, config.emb),
            "head_W2": (config.emb, config.emb),
            "head_b2": (1, config.emb),
            "gy_W": (config.emb, config.num_subtypes),
            "gy_b": (1, config.num_subtypes),
            "gd_W": (config.emb, config.num_domains),
            "gd_b": (1, config.num_domains),
        }
        if config.gated:
            shapes["U"] = (config.hidden_att, config.d)
        return shapes


class GeneParams(ParamStore):
    """Gene encoder f_g (FC + SELU) and its pretraining classifier."""

    branch = "gene"

    @classmethod
    def layout(cls, config: ModelConfig) -> dict[str, tuple[int, int]]:
        return {
            "gene_W": (config.gene_dim, config.emb),
            "gene_b": (1, config.emb),
            "clf_W": (config.emb, config.num_subtypes),
            "clf_b": (1, config.num_subtypes),
        }


def lecun_normal(rng: np.random.Generator, fan_in: int, fan_out: int) -> Tensor:
    """Normal weights with std 1/sqrt(fan_in), as self-normalizing layers need."""
    return rng.normal(0.0, 1.0 / math.sqrt(fan_in), size=(fan_in, fan_out))


def xavier_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> Tensor:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_params(config: ModelConfig, seed: int) -> tuple[MainParams, GeneParams]:
    """Initialize both branches deterministically from ``seed``.

    SELU-facing layers (F_c, the first head layer, the gene encoder) use LeCun-normal
    weights; tanh and linear layers use Xavier-uniform; prompts are N(0, 0.02^2);
    biases are zero. The two branches draw from independent streams, so the gene
    initialization does not depend on the main-branch layout.
    """
    main_seed, gene_seed = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(main_seed)
    d, emb, hidden = config.d, config.emb, config.hidden_att
    zeros = np.zeros

    main: dict[str, ArrayLike] = {
        "V": xavier_uniform(rng, d, hidden).T,
        "w": xavier_uniform(rng, hidden, 1),
        "fc_W": lecun_normal(rng, d, emb),
        "fc_b": zeros((1, emb)),
        "head_W1": lecun_normal(rng, emb, emb),
        "head_b1": zeros((1, emb)),
        "head_W2": xavier_uniform(rng, emb, emb),
        "head_b2": zeros((1, emb)),
        "gy_W": xavier_uniform(rng, emb, config.num_subtypes),
        "gy_b": zeros((1, config.num_subtypes)),
        "gd_W": xavier_uniform(rng, emb, config.num_domains),
        "gd_b": zeros((1, config.num_domains)),
    }
    if config.gated:
        main["U"] = xavier_uniform(rng, d, hidden).T
    main["prompts"] = rng.normal(0.0, PROMPT_INIT_STD, size=(config.n_prompts, d))

    rng = np.random.default_rng(gene_seed)
    gene: dict[str, ArrayLike] = {
        "gene_W": lecun_normal(rng, config.gene_dim, emb),
        "gene_b": zeros((1, emb)),
        "clf_W": xavier_uniform(rng, emb, config.num_subtypes),
        "clf_b": zeros((1, config.num_subtypes)),
    }
    return MainParams(config, main), GeneParams(config, gene)
