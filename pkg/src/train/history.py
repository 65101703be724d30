"""Per-epoch training history and early stopping."""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import pandas as pd

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ["epoch", "lambda_p", "L_S", "L_y", "L_d", "L_TOT", "val_rocauc", "val_acc"]


@dataclass(frozen=True)
class EpochRecord:
    """Mean batch losses of one epoch plus its validation metrics."""

    epoch: int
    lambda_p: float
    L_S: float
    L_y: float
    L_d: float
    L_TOT: float
    val_rocauc: float
    val_acc: float
    phase: str = "joint"


@dataclass
class TrainingHistory:
    """Epoch records of one training run.

    Attributes:
        records: One record per completed epoch, in order.
        best_epoch: Epoch whose parameters were kept.
        stopped_early: Whether patience ran out before the epoch budget.
    """

    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int | None = None
    stopped_early: bool = False

    def append(self, record: EpochRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> list[float]:
        return [float(getattr(record, name)) for record in self.records]

    @property
    def best_record(self) -> EpochRecord | None:
        for record in self.records:
            if record.epoch == self.best_epoch:
                return record
        return None

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {name: getattr(record, name) for name in HISTORY_COLUMNS} for record in self.records
        ]
        return pd.DataFrame(rows, columns=HISTORY_COLUMNS)

    def write_csv(self, path: str | Path) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(target, index=False, float_format="%.17g")
        logger.info(f"Wrote {len(self.records)}-epoch history to {target}")
        return target

    @classmethod
    def read_csv(cls, path: str | Path) -> "TrainingHistory":
        frame = pd.read_csv(path, float_precision="round_trip")
        records = [
            EpochRecord(
                epoch=int(row["epoch"]),
                **{name: float(row[name]) for name in HISTORY_COLUMNS[1:]},
            )
            for row in frame.to_dict(orient="records")
        ]
        return cls(records=records)


class EarlyStopping:
    """Track the best value of a monitored metric and signal when patience runs out.

    NaN values never count as an improvement.
    """

    def __init__(self, patience: int, mode: Literal["max", "min"] = "max") -> None:
        self.patience = patience
        self.mode = mode
        self.best = -math.inf if mode == "max" else math.inf
        self.best_epoch: int | None = None
        self.wait = 0

    def improved(self, value: float) -> bool:
        if math.isnan(value):
            return False
        return value > self.best if self.mode == "max" else value < self.best

    def update(self, epoch: int, value: float) -> bool:
        """Record one epoch; return True if it is the new best."""
        if self.improved(value):
            self.best, self.best_epoch, self.wait = value, epoch, 0
            return True
        self.wait += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.wait >= self.patience
