"""Synthetic bags with a planted subtype signal and a tissue-origin confounder.

Subtype and origin each own a fixed unit direction in instance space (orthonormal
columns of a QR factor). A fraction of each bag's instances carries the subtype
direction; every instance carries the origin direction. Gene vectors mix fixed
per-subtype and per-origin profiles, so both modalities encode both labels.
"""

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.data.dataset import Dataset
from src.models.bag import Bag
from src.models.config import NUM_SUBTYPES

logger = logging.getLogger(__name__)

# Class proportions D : IE : F : IE/F.
DEFAULT_CLASS_WEIGHTS = (3133.0, 1912.0, 1718.0, 1261.0)


class GenConfig(BaseModel):
    """Parameters of the synthetic generator.

    Attributes:
        num_samples: Number of bags.
        num_domains: Number of origins O.
        d: Instance embedding width.
        G: Gene vector length.
        bag_size_range: Inclusive (min, max) instance count per bag.
        subtype_signal: Strength of the subtype direction (instances and genes).
        domain_signal: Strength of the origin confounder (instances and genes).
        signal_fraction: Fraction of instances per bag carrying the subtype signal.
        noise_std: Standard deviation of the isotropic noise.
        class_weights: Relative subtype frequencies.
        seed: RNG seed.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    num_samples: int = Field(default=400, ge=1)
    num_domains: int = Field(default=8, ge=2)
    d: int = Field(default=192, gt=0)
    G: int = Field(default=64, gt=0)
    bag_size_range: tuple[int, int] = (8, 64)
    subtype_signal: float = Field(default=1.0, ge=0)
    domain_signal: float = Field(default=1.0, ge=0)
    signal_fraction: float = Field(default=0.3, gt=0, le=1)
    noise_std: float = Field(default=1.0, ge=0)
    class_weights: tuple[float, float, float, float] = DEFAULT_CLASS_WEIGHTS
    seed: int = 0

    @field_validator("bag_size_range")
    @classmethod
    def validate_bag_sizes(cls, v: tuple[int, int]) -> tuple[int, int]:
        low, high = v
        if low < 1 or low > high:
            raise ValueError(f"bag_size_range must satisfy 1 <= min <= max, got {v}")
        return v

    @field_validator("class_weights")
    @classmethod
    def validate_class_weights(
        cls, v: tuple[float, float, float, float]
    ) -> tuple[float, float, float, float]:
        if any(weight <= 0 for weight in v):
            raise ValueError(f"class weights must be positive, got {v}")
        return v

    @model_validator(mode="after")
    def validate_directions_fit(self) -> "GenConfig":
        if NUM_SUBTYPES + self.num_domains > self.d:
            raise ValueError(
                f"d={self.d} is too small for {NUM_SUBTYPES} subtype and "
                f"{self.num_domains} domain directions"
            )
        return self

    def with_overrides(self, **changes: object) -> "GenConfig":
        """Return a validated copy with some fields replaced."""
        return GenConfig.model_validate({**self.model_dump(), **changes})


def planted_directions(
    config: GenConfig, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Draw orthonormal subtype directions (4 x d) and origin directions (O x d)."""
    count = NUM_SUBTYPES + config.num_domains
    q, _ = np.linalg.qr(rng.standard_normal((config.d, count)))
    directions = q.T
    return directions[:NUM_SUBTYPES], directions[NUM_SUBTYPES:]


def generate(config: GenConfig) -> Dataset:
    """Generate a dataset; a pure function of ``config`` (seed included)."""
    rng = np.random.default_rng(config.seed)
    subtype_dirs, domain_dirs = planted_directions(config, rng)
    subtype_genes = rng.standard_normal((NUM_SUBTYPES, config.G))
    domain_genes = rng.standard_normal((config.num_domains, config.G))
    weights = np.asarray(config.class_weights, dtype=np.float64)
    weights = weights / weights.sum()
    low, high = config.bag_size_range

    bags = []
    for index in range(config.num_samples):
        subtype = int(rng.choice(NUM_SUBTYPES, p=weights))
        domain = int(rng.integers(config.num_domains))
        n = int(rng.integers(low, high + 1))
        n_signal = max(1, round(config.signal_fraction * n))

        instances = config.noise_std * rng.standard_normal((n, config.d))
        instances += config.domain_signal * domain_dirs[domain]
        instances[:n_signal] += config.subtype_signal * subtype_dirs[subtype]
        instances = instances[rng.permutation(n)]

        genes = (
            config.subtype_signal * subtype_genes[subtype]
            + config.domain_signal * domain_genes[domain]
            + config.noise_std * rng.standard_normal(config.G)
        )
        bags.append(Bag.create(f"S{index:05d}", instances, subtype, domain, genes))

    logger.info(
        f"Generated {config.num_samples} bags (d={config.d}, G={config.G}, "
        f"O={config.num_domains}, seed={config.seed})"
    )
    return Dataset(bags=tuple(bags), num_domains=config.num_domains, gen_config=config)
