"""Synthetic data, dataset files and the split protocol."""

from src.data.dataset import DATASET_VERSION, Dataset
from src.data.generator import DEFAULT_CLASS_WEIGHTS, GenConfig, generate, planted_directions
from src.data.splits import SplitPlan, build_split_plan, kfold, stratified_split
from src.data.storage import (
    DATASET_MAGIC,
    decode_dataset,
    encode_dataset,
    read_dataset,
    write_dataset,
)

__all__ = [
    "DATASET_MAGIC",
    "DATASET_VERSION",
    "DEFAULT_CLASS_WEIGHTS",
    "Dataset",
    "GenConfig",
    "SplitPlan",
    "build_split_plan",
    "decode_dataset",
    "encode_dataset",
    "generate",
    "kfold",
    "planted_directions",
    "read_dataset",
    "stratified_split",
    "write_dataset",
]
