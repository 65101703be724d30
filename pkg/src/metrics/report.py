"""Metrics reports and their aggregation over folds."""

import logging
import math
from collections.abc import Sequence
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import UndefinedMetricError
from src.metrics.classification import accuracy_f1, pr_auc_macro, roc_auc_macro_ovr

logger = logging.getLogger(__name__)

DEFAULT_MIN_DOMAIN_SAMPLES = 10
REPORTED_METRICS = ("rocauc", "prauc", "acc", "f1")


class DomainMetrics(BaseModel):
    """Within-domain metrics; ``rocauc`` is None when the domain holds one class."""

    rocauc: float | None = Field(default=None, ge=0, le=1)
    acc: float = Field(ge=0, le=1)
    n_samples: int = Field(ge=1)


class MetricsReport(BaseModel):
    """Metrics of one evaluation run.

    Attributes:
        rocauc: Macro one-vs-rest ROCAUC.
        prauc: Macro average precision.
        acc: Accuracy.
        f1: Macro F1.
        confusion: Confusion counts, rows true class, columns predicted class.
        per_domain: Within-domain metrics for domains with enough samples.
        n_samples: Number of evaluated samples.
    """

    model_config = ConfigDict(frozen=True)

    rocauc: float = Field(ge=0, le=1)
    prauc: float = Field(ge=0, le=1)
    acc: float = Field(ge=0, le=1)
    f1: float = Field(ge=0, le=1)
    confusion: list[list[int]]
    per_domain: dict[int, DomainMetrics] | None = None
    n_samples: int = Field(ge=1)

    @model_validator(mode="after")
    def validate_confusion(self) -> "MetricsReport":
        total = sum(sum(row) for row in self.confusion)
        if total != self.n_samples:
            raise ValueError(f"confusion total {total} != n_samples {self.n_samples}")
        trace = sum(self.confusion[i][i] for i in range(len(self.confusion)))
        if not math.isclose(self.acc, trace / total, rel_tol=0.0, abs_tol=1e-12):
            raise ValueError(f"acc {self.acc} disagrees with confusion trace {trace}/{total}")
        return self

    def metric(self, name: str) -> float:
        return float(getattr(self, name))

    def write(self, path: str | Path) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(self.model_dump_json(indent=2), encoding="utf-8")
        return target

    @classmethod
    def read(cls, path: str | Path) -> "MetricsReport":
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))


class MetricSummary(BaseModel):
    """Mean and sample standard deviation of one metric over runs."""

    mean: float
    std: float
    values: list[float]

    def __str__(self) -> str:
        return f"{self.mean:.4f}±{self.std:.4f}"


def build_report(
    probs: ArrayLike,
    labels: ArrayLike,
    domains: ArrayLike | None = None,
    *,
    min_domain_samples: int = DEFAULT_MIN_DOMAIN_SAMPLES,
) -> MetricsReport:
    """Compute every reported metric from class probabilities.

    Args:
        probs: N x C class probabilities.
        labels: N true labels.
        domains: Optional N domain labels for the per-domain breakdown.
        min_domain_samples: Domains with fewer samples are left out of the breakdown.
    """
    scores = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(labels, dtype=np.int64)
    preds = scores.argmax(axis=1)
    acc, f1, confusion = accuracy_f1(preds, targets, num_classes=scores.shape[1])

    per_domain = None
    if domains is not None:
        per_domain = _per_domain(scores, targets, np.asarray(domains), min_domain_samples)

    return MetricsReport(
        rocauc=roc_auc_macro_ovr(scores, targets),
        prauc=pr_auc_macro(scores, targets),
        acc=acc,
        f1=f1,
        confusion=confusion.tolist(),
        per_domain=per_domain,
        n_samples=int(targets.size),
    )


def _per_domain(
    scores: np.ndarray, targets: np.ndarray, domains: np.ndarray, min_samples: int
) -> dict[int, DomainMetrics]:
    breakdown: dict[int, DomainMetrics] = {}
    skipped = []
    for domain in np.unique(domains):
        mask = domains == domain
        count = int(mask.sum())
        if count < min_samples:
            skipped.append(int(domain))
            continue
        preds = scores[mask].argmax(axis=1)
        rocauc: float | None
        try:
            rocauc = roc_auc_macro_ovr(scores[mask], targets[mask])
        except UndefinedMetricError:
            logger.warning(f"domain {domain}: single subtype present, ROCAUC undefined")
            rocauc = None
        breakdown[int(domain)] = DomainMetrics(
            rocauc=rocauc, acc=float(np.mean(preds == targets[mask])), n_samples=count
        )
    if skipped:
        logger.warning(
            f"per-domain breakdown skips domains with < {min_samples} samples: {skipped}"
        )
    return breakdown


def summarize(reports: Sequence[MetricsReport]) -> dict[str, MetricSummary]:
    """Mean and sample standard deviation (ddof=1) of each headline metric."""
    summary = {}
    for name in REPORTED_METRICS:
        values = [report.metric(name) for report in reports]
        std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
        summary[name] = MetricSummary(mean=float(np.mean(values)), std=std, values=values)
    return summary
