"""Gene pretraining, one- and two-stage training, cross-validation and the gradient suite."""

from src.train.config import ABLATION_VARIANTS, StageMode, TrainConfig, Variant
from src.train.cv import CVReport, CVResult, FoldReport, FoldRun, run_cv, run_fold
from src.train.gene import pretrain_gene
from src.train.gradsuite import GradientSuiteResult, run_gradient_suite
from src.train.history import HISTORY_COLUMNS, EarlyStopping, EpochRecord, TrainingHistory
from src.train.loops import (
    model_config_for,
    train_ablation,
    train_main,
    train_one_stage,
    train_two_stage,
)
from src.train.objective import Phase, batch_mean, build_batch_objective
from src.train.optimizer import AdamState, adam_step

__all__ = [
    "ABLATION_VARIANTS",
    "HISTORY_COLUMNS",
    "AdamState",
    "CVReport",
    "CVResult",
    "EarlyStopping",
    "EpochRecord",
    "FoldReport",
    "FoldRun",
    "GradientSuiteResult",
    "Phase",
    "StageMode",
    "TrainConfig",
    "TrainingHistory",
    "Variant",
    "adam_step",
    "batch_mean",
    "build_batch_objective",
    "model_config_for",
    "pretrain_gene",
    "run_cv",
    "run_fold",
    "run_gradient_suite",
    "train_ablation",
    "train_main",
    "train_one_stage",
    "train_two_stage",
]
