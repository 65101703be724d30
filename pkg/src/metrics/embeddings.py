"""Embedding views, 2-D PCA and CSV export."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray

from src.errors import ContractError, DegenerateError
from src.models.bag import Bag

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PCAResult:
    """Projection onto the top two principal directions.

    Attributes:
        coords: N x 2 projected coordinates.
        components: 2 x D principal directions (rows).
        mean: Column means removed before projection.
        explained_ratio: Fraction of total variance per component.
    """

    coords: NDArray[np.float64]
    components: NDArray[np.float64]
    mean: NDArray[np.float64]
    explained_ratio: NDArray[np.float64]

    def reconstruct(self) -> NDArray[np.float64]:
        return self.coords @ self.components + self.mean


def raw_bag_embeddings(bags: Sequence[Bag]) -> NDArray[np.float64]:
    """Untrained view of each bag: the mean of its instance embeddings."""
    return np.vstack([bag.instances.mean(axis=0) for bag in bags])


def pca_2d(embeddings: ArrayLike) -> PCAResult:
    """Project centered embeddings onto the two leading covariance eigenvectors.

    Each component's sign is chosen so that its largest-magnitude coordinate is positive.

    Raises:
        ContractError: With fewer than three rows or fewer than two columns.
        DegenerateError: If all rows are identical.
    """
    data = np.asarray(embeddings, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 3 or data.shape[1] < 2:
        raise ContractError(f"pca_2d needs at least 3 rows and 2 columns, got {data.shape}")
    mean = data.mean(axis=0)
    centered = data - mean
    covariance = centered.T @ centered / (data.shape[0] - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    total = float(np.clip(eigenvalues, 0.0, None).sum())
    if total <= 0.0:
        raise DegenerateError("pca_2d input has rank 0 (all rows identical)")

    top = np.argsort(eigenvalues)[::-1][:2]
    components = eigenvectors[:, top].T
    coords = centered @ components.T
    for axis in range(2):
        pivot = int(np.argmax(np.abs(coords[:, axis])))
        if coords[pivot, axis] < 0.0:
            coords[:, axis] *= -1.0
            components[axis] *= -1.0
    ratio = np.clip(eigenvalues[top], 0.0, None) / total
    return PCAResult(coords=coords, components=components, mean=mean, explained_ratio=ratio)


def embeddings_frame(
    bags: Sequence[Bag], embeddings: ArrayLike, coords: ArrayLike | None = None
) -> pd.DataFrame:
    values = np.asarray(embeddings, dtype=np.float64)
    if values.shape[0] != len(bags):
        raise ContractError(f"{values.shape[0]} embedding rows for {len(bags)} bags")
    frame = pd.DataFrame(
        {
            "sample_id": [bag.sample_id for bag in bags],
            "domain": [bag.domain for bag in bags],
            "subtype": [bag.subtype for bag in bags],
        }
    )
    columns = pd.DataFrame(values, columns=[f"e_{i}" for i in range(values.shape[1])])
    frame = pd.concat([frame, columns], axis=1)
    if coords is not None:
        points = np.asarray(coords, dtype=np.float64)
        frame["pca_x"] = points[:, 0]
        frame["pca_y"] = points[:, 1]
    return frame


def export_embeddings(
    path: str | Path,
    bags: Sequence[Bag],
    embeddings: ArrayLike,
    coords: ArrayLike | None = None,
) -> Path:
    """Write embeddings as CSV: sample_id, domain, subtype, e_0.., optional pca_x, pca_y."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    embeddings_frame(bags, embeddings, coords).to_csv(target, index=False, float_format="%.17g")
    logger.info(f"Wrote {len(bags)} embeddings to {target}")
    return target
