"""Evaluation metrics, the domain-leakage probe and embedding export."""

from src.metrics.classification import (
    accuracy_f1,
    average_precision,
    binary_roc_auc,
    pr_auc_macro,
    roc_auc_macro_ovr,
    spread_size_correlation,
)
from src.metrics.embeddings import (
    PCAResult,
    embeddings_frame,
    export_embeddings,
    pca_2d,
    raw_bag_embeddings,
)
from src.metrics.evaluate import evaluate_bags, evaluate_gene_bags
from src.metrics.probe import domain_leakage_probe
from src.metrics.report import (
    DomainMetrics,
    MetricsReport,
    MetricSummary,
    build_report,
    summarize,
)

__all__ = [
    "DomainMetrics",
    "MetricSummary",
    "MetricsReport",
    "PCAResult",
    "accuracy_f1",
    "average_precision",
    "binary_roc_auc",
    "build_report",
    "domain_leakage_probe",
    "embeddings_frame",
    "evaluate_bags",
    "evaluate_gene_bags",
    "export_embeddings",
    "pca_2d",
    "pr_auc_macro",
    "raw_bag_embeddings",
    "roc_auc_macro_ovr",
    "spread_size_correlation",
    "summarize",
]
