"""Linear probe measuring how much domain identity frozen embeddings still carry."""

import logging

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import minimize

from src.errors import ContractError
from src.gradcore import Tape, add, backward, matmul, mul, scale, sum_all
from src.losses import cross_entropy

logger = logging.getLogger(__name__)

PROBE_TEST_FRACTION = 0.2
PROBE_L2 = 1e-3


def _probe_loss(
    flat: NDArray[np.float64], features: NDArray[np.float64], labels: list[int], num_classes: int
) -> tuple[float, NDArray[np.float64]]:
    width = features.shape[1]
    tape = Tape()
    weight = tape.leaf(flat[: width * num_classes].reshape(width, num_classes), name="W")
    bias = tape.leaf(flat[width * num_classes :].reshape(1, num_classes), name="b")
    inputs = tape.leaf(features, name="X")
    loss = add(
        cross_entropy(add(matmul(inputs, weight), bias), labels),
        scale(sum_all(mul(weight, weight)), PROBE_L2),
    )
    backward(tape, loss)
    grad = np.concatenate([weight.grad.ravel(), bias.grad.ravel()])
    return loss.item(), grad


def domain_leakage_probe(
    embeddings: ArrayLike,
    domain_labels: ArrayLike,
    seed: int = 0,
    *,
    num_domains: int | None = None,
    max_iter: int = 200,
) -> float:
    """Held-out accuracy of a linear softmax classifier predicting domain from embeddings.

    The probe is fit with L-BFGS on a seeded 80% split of standardized features and
    scored on the remaining 20%. Values near ``1 / O`` mean the embeddings carry little
    domain identity.

    Raises:
        ContractError: If there are fewer than ``10 * O`` samples.
    """
    features = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(domain_labels, dtype=np.int64)
    classes = int(num_domains if num_domains is not None else labels.max() + 1)
    if features.shape[0] != labels.size:
        raise ContractError(f"{features.shape[0]} embeddings for {labels.size} labels")
    if features.shape[0] < 10 * classes:
        raise ContractError(
            f"probe needs at least {10 * classes} samples for {classes} domains, "
            f"got {features.shape[0]}"
        )

    rng = np.random.default_rng(seed)
    order = rng.permutation(labels.size)
    n_test = round(PROBE_TEST_FRACTION * labels.size)
    test_idx, train_idx = order[:n_test], order[n_test:]

    mean = features[train_idx].mean(axis=0)
    std = features[train_idx].std(axis=0)
    std[std == 0.0] = 1.0
    standardized = (features - mean) / std

    train_x, train_y = standardized[train_idx], labels[train_idx].tolist()
    start = np.zeros(features.shape[1] * classes + classes)
    result = minimize(
        _probe_loss,
        start,
        args=(train_x, train_y, classes),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter},
    )
    width = features.shape[1]
    weight = result.x[: width * classes].reshape(width, classes)
    bias = result.x[width * classes :]
    predicted = (standardized[test_idx] @ weight + bias).argmax(axis=1)
    accuracy = float(np.mean(predicted == labels[test_idx]))
    logger.info(f"Domain probe accuracy {accuracy:.3f} (chance {1.0 / classes:.3f})")
    return accuracy
