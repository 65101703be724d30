"""Ranking and label metrics: macro one-vs-rest ROCAUC, macro average precision,
accuracy, macro F1 and the confusion matrix."""

import logging
from collections.abc import Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.stats import pearsonr, rankdata

from src.errors import ContractError, DegenerateError, UndefinedMetricError

logger = logging.getLogger(__name__)

ROW_SUM_TOLERANCE = 1e-6


def _validate_scores(
    scores: ArrayLike, labels: ArrayLike
) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    probs = np.asarray(scores, dtype=np.float64)
    targets = np.asarray(labels, dtype=np.int64)
    if probs.ndim != 2 or probs.shape[0] != targets.shape[0]:
        raise ContractError(f"scores {probs.shape} do not match {targets.shape[0]} labels")
    if probs.shape[0] == 0:
        raise ContractError("metrics need at least one sample")
    if np.any(targets < 0) or np.any(targets >= probs.shape[1]):
        raise ContractError(f"labels must lie in [0, {probs.shape[1]})")
    deviation = np.abs(probs.sum(axis=1) - 1.0).max()
    if deviation > ROW_SUM_TOLERANCE:
        raise ContractError(f"score rows must sum to 1 (max deviation {deviation:.3g})")
    if np.unique(targets).size < 2:
        raise UndefinedMetricError("metric undefined: labels contain a single class")
    return probs, targets


def binary_roc_auc(scores: ArrayLike, positive: ArrayLike) -> float:
    """Area under the ROC curve from midranks (ties count one half)."""
    values = np.asarray(scores, dtype=np.float64)
    is_pos = np.asarray(positive, dtype=bool)
    n_pos = int(is_pos.sum())
    n_neg = is_pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROCAUC needs both positive and negative samples")
    ranks = rankdata(values, method="average")
    return float((ranks[is_pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def average_precision(scores: ArrayLike, positive: ArrayLike) -> float:
    """Sum of (R_k - R_{k-1}) * P_k over the distinct thresholds, highest first."""
    values = np.asarray(scores, dtype=np.float64)
    is_pos = np.asarray(positive, dtype=bool)
    if not is_pos.any():
        raise UndefinedMetricError("average precision needs at least one positive sample")
    order = np.argsort(-values, kind="mergesort")
    sorted_scores = values[order]
    hits = is_pos[order].astype(np.float64)
    last_of_group = np.r_[np.flatnonzero(np.diff(sorted_scores)), sorted_scores.size - 1]
    true_pos = np.cumsum(hits)[last_of_group]
    predicted = last_of_group + 1.0
    precision = true_pos / predicted
    recall = true_pos / true_pos[-1]
    previous = np.r_[0.0, recall[:-1]]
    return min(1.0, float(np.sum((recall - previous) * precision)))


def _macro(scores: ArrayLike, labels: ArrayLike, name: str, metric: str) -> float:
    probs, targets = _validate_scores(scores, labels)
    per_class = []
    for cls in range(probs.shape[1]):
        positive = targets == cls
        if not positive.any():
            logger.warning(f"{name}: class {cls} absent from labels, skipped")
            continue
        if metric == "roc":
            per_class.append(binary_roc_auc(probs[:, cls], positive))
        else:
            per_class.append(average_precision(probs[:, cls], positive))
    return float(np.mean(per_class))


def roc_auc_macro_ovr(scores: ArrayLike, labels: ArrayLike) -> float:
    """Macro-averaged one-vs-rest ROCAUC over the classes present in ``labels``.

    Args:
        scores: N x C class probabilities, rows summing to 1.
        labels: N integer labels.

    Raises:
        UndefinedMetricError: If the labels hold a single class.
        ContractError: On malformed scores or labels.
    """
    return _macro(scores, labels, "ROCAUC", "roc")


def pr_auc_macro(scores: ArrayLike, labels: ArrayLike) -> float:
    """Macro-averaged average precision over the classes present in ``labels``."""
    return _macro(scores, labels, "PRAUC", "pr")


def accuracy_f1(
    pred_labels: ArrayLike, labels: ArrayLike, num_classes: int = 4
) -> tuple[float, float, NDArray[np.int64]]:
    """Accuracy, macro F1 and the confusion matrix (rows: true, cols: predicted).

    Classes with neither instances nor predictions are left out of the F1 mean.

    Raises:
        ContractError: On empty input or labels outside ``[0, num_classes)``.
    """
    preds = np.asarray(pred_labels, dtype=np.int64)
    targets = np.asarray(labels, dtype=np.int64)
    if preds.size == 0 or preds.shape != targets.shape:
        raise ContractError(
            f"need equally sized non-empty inputs, got {preds.shape}, {targets.shape}"
        )
    for name, array in (("predictions", preds), ("labels", targets)):
        if np.any(array < 0) or np.any(array >= num_classes):
            raise ContractError(f"{name} must lie in [0, {num_classes})")

    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(confusion, (targets, preds), 1)
    acc = float(np.trace(confusion) / targets.size)

    scores = []
    for cls in range(num_classes):
        actual = confusion[cls].sum()
        predicted = confusion[:, cls].sum()
        if actual == 0 and predicted == 0:
            continue
        scores.append(2.0 * confusion[cls, cls] / (actual + predicted))
    return acc, float(np.mean(scores)), confusion


def spread_size_correlation(
    per_domain_values: Mapping[int, Sequence[float]], domain_sizes: Mapping[int, int]
) -> float:
    """Pearson correlation between a metric's spread across folds and domain size.

    Args:
        per_domain_values: Metric values per domain, one per fold.
        domain_sizes: Number of samples per domain.

    Raises:
        DegenerateError: With fewer than three domains or constant spreads or sizes.
    """
    domains = sorted(set(per_domain_values) & set(domain_sizes))
    domains = [domain for domain in domains if len(per_domain_values[domain]) >= 2]
    if len(domains) < 3:
        raise DegenerateError("spread/size correlation needs at least three domains")
    spreads = np.array([np.std(per_domain_values[domain], ddof=1) for domain in domains])
    sizes = np.array([domain_sizes[domain] for domain in domains], dtype=np.float64)
    if np.ptp(spreads) == 0.0 or np.ptp(sizes) == 0.0:
        raise DegenerateError("spread/size correlation is undefined for constant inputs")
    return float(pearsonr(spreads, sizes)[0])
