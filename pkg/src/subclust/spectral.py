"""Graph construction from a representation matrix and spectral clustering.

Clustering runs on the shifted Laplacian: its leading eigenvectors equal
the trailing eigenvectors of the normalized Laplacian, which makes the
embedding more robust to noise in the affinity.
"""

from dataclasses import dataclass

import numpy as np

from subclust.linalg import kmeans, sym_eig


@dataclass
class ClusterIndicator:
    """One-hot N x K assignment matrix plus the equivalent label vector."""

    q: np.ndarray
    labels: np.ndarray


def indicator_from_labels(labels, k):
    labels = np.asarray(labels, dtype=int)
    q = np.zeros((labels.shape[0], k))
    q[np.arange(labels.shape[0]), labels] = 1.0
    return ClusterIndicator(q=q, labels=labels)


def affinity_from_c(c):
    """Symmetrized absolute affinity (|C| + |C^T|) / 2."""
    c = np.asarray(c, dtype=float)
    w = 0.5 * (np.abs(c) + np.abs(c.T))
    np.fill_diagonal(w, 0.0)
    return w


def normalized_laplacian(w):
    """I - D^{-1/2} W D^{-1/2}; isolated vertices get an identity row."""
    w = np.asarray(w, dtype=float)
    deg = w.sum(axis=1)
    with np.errstate(divide="ignore"):
        inv_sqrt = np.where(deg > 0.0, 1.0 / np.sqrt(np.where(deg > 0.0, deg, 1.0)), 0.0)
    s = w * inv_sqrt[:, None] * inv_sqrt[None, :]
    lap = np.eye(w.shape[0]) - s
    return 0.5 * (lap + lap.T)


def shifted_laplacian(w):
    """2I minus the normalized Laplacian, i.e. I + D^{-1/2} W D^{-1/2}."""
    return 2.0 * np.eye(w.shape[0]) - normalized_laplacian(w)


def spectral_cluster(w, k, seed=0, restarts=10):
    """Cluster via k-means on the k leading eigenvectors of the shifted Laplacian.

    Embedding rows are normalized to unit length before k-means (zero rows
    are left as zero).
    """
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    if k < 2 or k > n:
        raise ValueError(f"k={k} out of range for {n} points")
    pairs = sym_eig(shifted_laplacian(w))
    embedding = pairs.vectors[:, :k]
    norms = np.linalg.norm(embedding, axis=1)
    norms = np.where(norms == 0.0, 1.0, norms)
    embedding = embedding / norms[:, None]
    labels = kmeans(embedding, k, seed=seed, restarts=restarts)
    return indicator_from_labels(labels, k)
