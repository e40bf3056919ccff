"""Dense numerical substrate shared by all other modules.

Symmetric eigendecomposition, SVD, k-means, optimal assignment, pairwise
distances and proximal operators. Everything here is a pure function over
immutable inputs; results are deterministic for fixed seeds.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

SYM_TOL = 1e-10


@dataclass
class EigenPairs:
    """Full spectrum of a symmetric matrix, eigenvalues descending.

    ``vectors`` holds one eigenvector per column, aligned with ``values``.
    """

    values: np.ndarray
    vectors: np.ndarray


def sym_eig(a):
    """Full eigendecomposition of a symmetric matrix.

    Returns eigenvalues in descending order with orthonormal eigenvectors
    (one per column). Raises ValueError on non-square or asymmetric input.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"sym_eig requires a square matrix, got shape {a.shape}")
    if a.size and np.max(np.abs(a - a.T)) > SYM_TOL:
        raise ValueError("sym_eig requires a symmetric matrix")
    values, vectors = np.linalg.eigh(a)
    return EigenPairs(values=values[::-1].copy(), vectors=vectors[:, ::-1].copy())


def svd(a):
    """Thin SVD: returns (u, s, v) with a = u @ diag(s) @ v.T.

    Singular values are nonnegative and descending; v holds right singular
    vectors as columns.
    """
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError("svd requires finite input")
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    return u, s, vh.T


def _kmeans_pp_init(points, k, rng):
    """k-means++ seeding: spread initial centers by squared-distance sampling."""
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    idx = rng.integers(n)
    centers[0] = points[idx]
    closest = np.sum((points - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=closest / total)
        centers[i] = points[idx]
        closest = np.minimum(closest, np.sum((points - centers[i]) ** 2, axis=1))
    return centers


def _lloyd(points, centers, max_iters, tol):
    """Lloyd iterations; empty clusters reseeded with the worst-fit point."""
    k = centers.shape[0]
    prev_inertia = np.inf
    labels = np.zeros(points.shape[0], dtype=int)
    for _ in range(max_iters):
        d2 = (
            np.sum(points**2, axis=1)[:, None]
            - 2.0 * points @ centers.T
            + np.sum(centers**2, axis=1)[None, :]
        )
        labels = np.argmin(d2, axis=1)
        inertia = float(np.sum(d2[np.arange(points.shape[0]), labels]))
        for c in range(k):
            mask = labels == c
            if not np.any(mask):
                far = int(np.argmax(d2[np.arange(points.shape[0]), labels]))
                centers[c] = points[far]
                labels[far] = c
                mask = labels == c
            centers[c] = points[mask].mean(axis=0)
        if np.isfinite(prev_inertia) and prev_inertia - inertia <= tol * max(prev_inertia, 1e-12):
            break
        prev_inertia = inertia
    d2 = (
        np.sum(points**2, axis=1)[:, None]
        - 2.0 * points @ centers.T
        + np.sum(centers**2, axis=1)[None, :]
    )
    labels = np.argmin(d2, axis=1)
    inertia = float(np.sum(d2[np.arange(points.shape[0]), labels]))
    return labels, inertia


def kmeans(points, k, seed=0, restarts=10, max_iters=300, tol=1e-6):
    """k-means with k-means++ seeding and restarts; one point per row.

    Deterministic for fixed (seed, restarts): the labeling with the lowest
    within-cluster sum of squares across restarts is returned.
    """
    points = np.asarray(points, dtype=float)
    if k < 1 or k > points.shape[0]:
        raise ValueError(f"k={k} out of range for {points.shape[0]} points")
    rng = np.random.default_rng(seed)
    best_labels, best_inertia = None, np.inf
    for _ in range(restarts):
        centers = _kmeans_pp_init(points, k, rng)
        labels, inertia = _lloyd(points, centers, max_iters, tol)
        if inertia < best_inertia:
            best_inertia, best_labels = inertia, labels
    return best_labels


def optimal_assignment(cost):
    """Minimum-cost assignment (Hungarian contract) on a square cost matrix.

    Returns perm with perm[i] = column assigned to row i.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"optimal_assignment requires a square matrix, got {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise ValueError("optimal_assignment requires finite costs")
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(cost.shape[0], dtype=int)
    perm[rows] = cols
    return perm


def pairwise_l2(x):
    """Symmetric matrix of Euclidean distances between the columns of x."""
    x = np.asarray(x, dtype=float)
    sq = np.sum(x**2, axis=0)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x.T @ x)
    np.maximum(d2, 0.0, out=d2)
    d = np.sqrt(d2)
    np.fill_diagonal(d, 0.0)
    return 0.5 * (d + d.T)


def soft_threshold(a, tau):
    """Entrywise shrinkage sign(a) * max(|a| - tau, 0)."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    a = np.asarray(a, dtype=float)
    return np.sign(a) * np.maximum(np.abs(a) - tau, 0.0)


def singular_value_threshold(a, tau):
    """Shrink singular values by tau (proximal operator of the nuclear norm)."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    u, s, v = svd(a)
    s = np.maximum(s - tau, 0.0)
    return (u * s) @ v.T
