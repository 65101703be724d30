"""Three-branch network: prompted ABMIL main branch and SELU gene encoder."""

from src.models.bag import Bag
from src.models.checkpoint import (
    CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from src.models.config import NUM_SUBTYPES, ArchitectureConfig, ModelConfig
from src.models.network import (
    GeneOutput,
    MainOutput,
    abmil_pool,
    append_prompts,
    attention_weights,
    embed,
    gene_embed,
    gene_forward,
    gene_predict_proba,
    linear,
    main_forward,
    predict_proba,
    stack_gene_vectors,
)
from src.models.params import (
    DOMAIN_HEAD,
    POOL_PARAMS,
    GeneParams,
    MainParams,
    ParamStore,
    init_params,
    lecun_normal,
    xavier_uniform,
)

__all__ = [
    "CHECKPOINT_MAGIC",
    "CHECKPOINT_VERSION",
    "DOMAIN_HEAD",
    "NUM_SUBTYPES",
    "POOL_PARAMS",
    "ArchitectureConfig",
    "Bag",
    "GeneOutput",
    "GeneParams",
    "MainOutput",
    "MainParams",
    "ModelConfig",
    "ParamStore",
    "abmil_pool",
    "append_prompts",
    "attention_weights",
    "decode_checkpoint",
    "embed",
    "encode_checkpoint",
    "gene_embed",
    "gene_forward",
    "gene_predict_proba",
    "init_params",
    "lecun_normal",
    "linear",
    "load_checkpoint",
    "main_forward",
    "predict_proba",
    "save_checkpoint",
    "stack_gene_vectors",
    "xavier_uniform",
]
