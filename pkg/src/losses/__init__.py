"""Objective terms and the lambda_p schedule."""

from src.losses.schedule import Schedule, lambda_schedule
from src.losses.terms import (
    LossBundle,
    cross_entropy,
    dann_loss,
    neg_cosine,
    siamese_loss,
    total_loss,
)

__all__ = [
    "LossBundle",
    "Schedule",
    "cross_entropy",
    "dann_loss",
    "lambda_schedule",
    "neg_cosine",
    "siamese_loss",
    "total_loss",
]
