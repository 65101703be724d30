"""Evaluate trained parameters on bags."""

from collections.abc import Sequence

from src.metrics.report import DEFAULT_MIN_DOMAIN_SAMPLES, MetricsReport, build_report
from src.models import Bag, GeneParams, MainParams, gene_predict_proba, predict_proba


def evaluate_bags(
    params: MainParams,
    bags: Sequence[Bag],
    *,
    min_domain_samples: int = DEFAULT_MIN_DOMAIN_SAMPLES,
) -> MetricsReport:
    """Metrics of the main branch's subtype predictions on ``bags``."""
    return build_report(
        predict_proba(params, bags),
        [bag.subtype for bag in bags],
        [bag.domain for bag in bags],
        min_domain_samples=min_domain_samples,
    )


def evaluate_gene_bags(
    params: GeneParams,
    bags: Sequence[Bag],
    *,
    min_domain_samples: int = DEFAULT_MIN_DOMAIN_SAMPLES,
) -> MetricsReport:
    """Metrics of the gene-only classifier (requires gene vectors)."""
    return build_report(
        gene_predict_proba(params, bags),
        [bag.subtype for bag in bags],
        [bag.domain for bag in bags],
        min_domain_samples=min_domain_samples,
    )
