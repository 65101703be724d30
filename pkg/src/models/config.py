"""Model configuration."""

from typing import TYPE_CHECKING

from pydantic import BaseModel, ConfigDict, Field

if TYPE_CHECKING:
    from src.data.dataset import Dataset

NUM_SUBTYPES = 4


class ArchitectureConfig(BaseModel):
    """Architecture choices that do not depend on the data.

    Attributes:
        n_prompts: Number of learnable prompt rows appended to each bag (0 = plain ABMIL).
        emb: Width of the shared embedding (F_c output, Siamese head, gene embedding).
        hidden_att: Hidden width of the attention projection V.
        gated: Use gated attention (tanh branch multiplied by a sigmoid gate).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_prompts: int = Field(default=4, ge=0)
    emb: int = Field(default=128, gt=0)
    hidden_att: int = Field(default=64, gt=0)
    gated: bool = False


class ModelConfig(ArchitectureConfig):
    """Full model configuration, including data-dependent widths.

    Attributes:
        d: Instance embedding width.
        num_subtypes: Number of subtype classes.
        num_domains: Number of origin domains.
        gene_dim: Length of the gene vector.
    """

    d: int = Field(default=192, gt=0)
    num_subtypes: int = Field(default=NUM_SUBTYPES, gt=1)
    num_domains: int = Field(default=8, gt=1)
    gene_dim: int = Field(default=64, gt=0)

    @classmethod
    def for_dataset(
        cls, dataset: "Dataset", architecture: ArchitectureConfig | None = None
    ) -> "ModelConfig":
        """Build a config whose data-dependent widths match ``dataset``.

        A dataset without gene vectors keeps the default ``gene_dim``; the gene
        branch is then never fed.
        """
        arch = architecture or ArchitectureConfig()
        widths: dict[str, int] = {"d": dataset.d, "num_domains": dataset.num_domains}
        if dataset.gene_dim:
            widths["gene_dim"] = dataset.gene_dim
        return cls(**arch.model_dump(), **widths)

    def with_prompts(self, n_prompts: int) -> "ModelConfig":
        return self.model_copy(update={"n_prompts": n_prompts})
