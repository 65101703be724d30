"""In-memory dataset of bags."""

from collections import Counter
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import NDArray

from src.errors import ContractError
from src.models.bag import Bag

if TYPE_CHECKING:
    from src.data.generator import GenConfig

DATASET_VERSION = 1


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ordered collection of bags with unique ids.

    Attributes:
        bags: Samples in file order.
        num_domains: Number of origin labels O.
        gen_config: Generator configuration that produced the data, if known.
        format_version: Version of the file format the data was read from.
    """

    bags: tuple[Bag, ...]
    num_domains: int
    gen_config: "GenConfig | None" = None
    format_version: int = DATASET_VERSION

    def __post_init__(self) -> None:
        if not self.bags:
            raise ContractError("a dataset needs at least one bag")
        counts = Counter(bag.sample_id for bag in self.bags)
        duplicates = sorted(sample_id for sample_id, count in counts.items() if count > 1)
        if duplicates:
            raise ContractError(f"duplicate sample ids: {duplicates[:5]}")
        widths = {bag.d for bag in self.bags}
        if len(widths) != 1:
            raise ContractError(f"bags disagree on instance width: {sorted(widths)}")
        gene_lengths = {
            bag.gene_vector.shape[1] for bag in self.bags if bag.gene_vector is not None
        }
        if len(gene_lengths) > 1:
            raise ContractError(f"bags disagree on gene length: {sorted(gene_lengths)}")
        for bag in self.bags:
            if bag.domain >= self.num_domains:
                raise ContractError(
                    f"bag {bag.sample_id!r}: domain {bag.domain} >= num_domains {self.num_domains}"
                )

    def __len__(self) -> int:
        return len(self.bags)

    def __iter__(self) -> Iterator[Bag]:
        return iter(self.bags)

    @property
    def d(self) -> int:
        return self.bags[0].d

    @property
    def gene_dim(self) -> int:
        """Gene vector length, 0 when no bag carries genes."""
        for bag in self.bags:
            if bag.gene_vector is not None:
                return int(bag.gene_vector.shape[1])
        return 0

    @property
    def ids(self) -> list[str]:
        return [bag.sample_id for bag in self.bags]

    @property
    def subtypes(self) -> NDArray[np.int64]:
        return np.array([bag.subtype for bag in self.bags], dtype=np.int64)

    @property
    def domains(self) -> NDArray[np.int64]:
        return np.array([bag.domain for bag in self.bags], dtype=np.int64)

    @cached_property
    def by_id(self) -> dict[str, Bag]:
        return {bag.sample_id: bag for bag in self.bags}

    def subset(self, ids: Iterable[str]) -> "Dataset":
        """Bags with the given ids, in the order given.

        Raises:
            ContractError: If an id is unknown.
        """
        chosen = []
        for sample_id in ids:
            if sample_id not in self.by_id:
                raise ContractError(f"unknown sample id {sample_id!r}")
            chosen.append(self.by_id[sample_id])
        return Dataset(
            bags=tuple(chosen),
            num_domains=self.num_domains,
            gen_config=self.gen_config,
            format_version=self.format_version,
        )

    def same_as(self, other: "Dataset") -> bool:
        """Bitwise equality of all bags and the domain count."""
        return (
            self.num_domains == other.num_domains
            and len(self) == len(other)
            and all(a.same_as(b) for a, b in zip(self.bags, other.bags, strict=True))
        )
