"""Stratified hold-out split and k-fold plan over (subtype x domain) strata."""

import json
import logging
import math
from collections import defaultdict
from collections.abc import Sequence
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.data.dataset import Dataset
from src.errors import ContractError
from src.models.config import NUM_SUBTYPES

logger = logging.getLogger(__name__)

Stratum = tuple[int, int]


class SplitPlan(BaseModel):
    """Hold-out test ids plus k disjoint folds covering the training ids.

    Attributes:
        test_ids: Held-out test sample ids.
        folds: Disjoint fold id lists; fold ``f`` validates run ``f``.
    """

    model_config = ConfigDict(frozen=True)

    test_ids: list[str]
    folds: list[list[str]] = Field(min_length=2)

    @model_validator(mode="after")
    def validate_disjoint(self) -> "SplitPlan":
        seen: set[str] = set(self.test_ids)
        if len(seen) != len(self.test_ids):
            raise ValueError("test_ids contains duplicates")
        for index, fold in enumerate(self.folds):
            overlap = seen.intersection(fold)
            if overlap or len(set(fold)) != len(fold):
                raise ValueError(
                    f"fold {index} overlaps the test set or an earlier fold: {sorted(overlap)[:5]}"
                )
            seen.update(fold)
        return self

    @property
    def k(self) -> int:
        return len(self.folds)

    @property
    def train_ids(self) -> list[str]:
        """All ids outside the test set (the union of the folds)."""
        return [sample_id for fold in self.folds for sample_id in fold]

    def fold_partition(self, fold: int) -> tuple[list[str], list[str]]:
        """Return ``(train_ids, val_ids)`` of run ``fold``.

        Raises:
            ContractError: If ``fold`` is not a valid fold index.
        """
        if not 0 <= fold < self.k:
            raise ContractError(f"fold {fold} outside [0, {self.k})")
        train = [
            sample_id for index, ids in enumerate(self.folds) if index != fold for sample_id in ids
        ]
        return train, list(self.folds[fold])

    def check_dataset(self, dataset: Dataset) -> None:
        """Raise ContractError if the plan names ids the dataset lacks."""
        known = set(dataset.ids)
        missing = [
            sample_id for sample_id in [*self.test_ids, *self.train_ids] if sample_id not in known
        ]
        if missing:
            raise ContractError(
                f"split plan names {len(missing)} unknown ids, e.g. {missing[0]!r}"
            )

    def write(self, path: str | Path) -> Path:
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(json.dumps(self.model_dump(), indent=2), encoding="utf-8")
        logger.info(f"Wrote split plan ({len(self.test_ids)} test, {self.k} folds) to {target}")
        return target

    @classmethod
    def read(cls, path: str | Path) -> "SplitPlan":
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))


def _strata(dataset: Dataset, ids: Sequence[str]) -> dict[Stratum, list[str]]:
    groups: dict[Stratum, list[str]] = defaultdict(list)
    for sample_id in ids:
        bag = dataset.by_id[sample_id]
        groups[(bag.subtype, bag.domain)].append(sample_id)
    return dict(sorted(groups.items()))


def _warn_empty_strata(dataset: Dataset, groups: dict[Stratum, list[str]]) -> None:
    empty = [
        (subtype, domain)
        for subtype in range(NUM_SUBTYPES)
        for domain in range(dataset.num_domains)
        if (subtype, domain) not in groups
    ]
    if empty:
        logger.warning(f"{len(empty)} (subtype, domain) strata are empty, e.g. {empty[:3]}")


def stratified_split(dataset: Dataset, test_fraction: float = 0.15, seed: int = 0) -> list[str]:
    """Choose the held-out test ids, stratified by (subtype, domain).

    Each stratum contributes ``floor(fraction * size)`` samples plus one extra for the
    strata with the largest remainders (ties broken by stratum key), so the total is
    exactly ``round(fraction * N)``.

    Returns:
        Test ids in dataset order.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ContractError(f"test_fraction must be in (0, 1), got {test_fraction}")
    groups = _strata(dataset, dataset.ids)
    _warn_empty_strata(dataset, groups)

    target = round(test_fraction * len(dataset))
    exact = {key: test_fraction * len(ids) for key, ids in groups.items()}
    quota = {key: math.floor(value) for key, value in exact.items()}
    by_remainder = sorted(groups, key=lambda key: (-(exact[key] - quota[key]), key))
    for key in by_remainder[: target - sum(quota.values())]:
        quota[key] += 1

    rng = np.random.default_rng(seed)
    chosen: set[str] = set()
    for key, ids in groups.items():
        order = rng.permutation(len(ids))
        chosen.update(ids[index] for index in order[: quota[key]])
    return [sample_id for sample_id in dataset.ids if sample_id in chosen]


def kfold(
    dataset: Dataset, train_ids: Sequence[str], k: int = 5, seed: int = 0
) -> list[list[str]]:
    """Split ``train_ids`` into ``k`` stratified, disjoint, covering folds.

    Strata are shuffled and laid end to end; position ``i`` goes to fold ``i % k``,
    so each stratum's counts differ by at most one across folds.

    Raises:
        ContractError: If ``k < 2`` or ``k`` exceeds the number of ids.
    """
    if k < 2:
        raise ContractError(f"k must be at least 2, got {k}")
    if k > len(train_ids):
        raise ContractError(f"cannot make {k} folds from {len(train_ids)} ids")
    groups = _strata(dataset, train_ids)
    smallest = min(len(ids) for ids in groups.values())
    if smallest < k:
        logger.warning(
            f"smallest stratum has {smallest} samples < k={k}; stratification relaxed "
            "(some folds miss that stratum)"
        )

    rng = np.random.default_rng(seed)
    folds: list[list[str]] = [[] for _ in range(k)]
    position = 0
    for ids in groups.values():
        for index in rng.permutation(len(ids)):
            folds[position % k].append(ids[index])
            position += 1
    return folds


def build_split_plan(
    dataset: Dataset, test_fraction: float = 0.15, k: int = 5, seed: int = 0
) -> SplitPlan:
    """Stratified hold-out test set plus k folds over the remainder."""
    test_ids = stratified_split(dataset, test_fraction, seed)
    held_out = set(test_ids)
    train_ids = [sample_id for sample_id in dataset.ids if sample_id not in held_out]
    plan = SplitPlan(test_ids=test_ids, folds=kfold(dataset, train_ids, k, seed))
    logger.info(
        f"Split {len(dataset)} samples: {len(train_ids)} train in {k} folds, {len(test_ids)} test"
    )
    return plan
