"""One sample: a bag of instance embeddings with its labels."""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from src.errors import ContractError, ShapeError
from src.gradcore import Tensor, as_tensor
from src.models.config import NUM_SUBTYPES


@dataclass(frozen=True, eq=False)
class Bag:
    """A bag of ``n`` instance embeddings of width ``d``.

    Attributes:
        sample_id: Unique sample identifier.
        instances: n x d instance embeddings (read-only).
        subtype: Subtype label in 0..3.
        domain: Origin label in 0..O-1.
        gene_vector: 1 x G gene vector, or None when unavailable (inference).
    """

    sample_id: str
    instances: Tensor
    subtype: int
    domain: int
    gene_vector: Tensor | None = None

    def __post_init__(self) -> None:
        if self.instances.ndim != 2 or self.instances.shape[0] < 1:
            raise ShapeError(
                f"bag {self.sample_id!r} needs at least one instance row, "
                f"got {self.instances.shape}"
            )
        if not 0 <= self.subtype < NUM_SUBTYPES:
            raise ContractError(f"bag {self.sample_id!r}: subtype {self.subtype} out of range")
        if self.domain < 0:
            raise ContractError(f"bag {self.sample_id!r}: negative domain {self.domain}")

    @classmethod
    def create(
        cls,
        sample_id: str,
        instances: ArrayLike,
        subtype: int,
        domain: int,
        gene_vector: ArrayLike | None = None,
    ) -> "Bag":
        """Build a bag, copying arrays into immutable float64 tensors."""
        genes = None if gene_vector is None else as_tensor(np.ravel(gene_vector))
        return cls(
            sample_id=sample_id,
            instances=as_tensor(instances),
            subtype=int(subtype),
            domain=int(domain),
            gene_vector=genes,
        )

    @property
    def n(self) -> int:
        return int(self.instances.shape[0])

    @property
    def d(self) -> int:
        return int(self.instances.shape[1])

    @property
    def has_genes(self) -> bool:
        return self.gene_vector is not None

    def same_as(self, other: "Bag") -> bool:
        """Bitwise equality of ids, labels and values."""
        if (self.sample_id, self.subtype, self.domain) != (
            other.sample_id,
            other.subtype,
            other.domain,
        ):
            return False
        if self.instances.shape != other.instances.shape:
            return False
        if self.instances.tobytes() != other.instances.tobytes():
            return False
        if self.gene_vector is None or other.gene_vector is None:
            return self.gene_vector is None and other.gene_vector is None
        return self.gene_vector.tobytes() == other.gene_vector.tobytes()

    def without_genes(self) -> "Bag":
        return Bag(self.sample_id, self.instances, self.subtype, self.domain, None)
