"""Subspace clustering toolkit.

Provides a self-supervised deep subspace clustering pipeline (autoencoder
pre-training, layer-wise self-expression fine-tuning, clustering-quality
fine-tuning, spectral clustering on the shifted Laplacian), linear
self-expressive baselines (SSC, LRR, RTSC), and clustering metrics.
"""

from subclust.data import Dataset, SyntheticSpec, generate_synthetic
from subclust.metrics import MetricsReport, acc, f1_pairwise, nmi
from subclust.pipeline import RunConfig, RunReport, run_pipeline

__all__ = [
    "Dataset",
    "SyntheticSpec",
    "generate_synthetic",
    "MetricsReport",
    "acc",
    "nmi",
    "f1_pairwise",
    "RunConfig",
    "RunReport",
    "run_pipeline",
]

__version__ = "0.1.0"
