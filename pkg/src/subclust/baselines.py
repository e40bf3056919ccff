"""Linear self-expressive baselines: SSC (ADMM, l1), LRR (ADMM, nuclear
norm + l2,1 error), and RTSC (angular nearest-neighbor graph)."""

from dataclasses import dataclass

import numpy as np

from subclust.linalg import singular_value_threshold, soft_threshold
from subclust.metrics import score
from subclust.selfexpr import ipd_postprocess
from subclust.spectral import affinity_from_c, spectral_cluster


@dataclass
class AdmmConfig:
    lam: float
    rho: float = 1.0
    max_iters: int = 1000
    tol: float = 1e-6

    def __post_init__(self):
        if min(self.lam, self.rho, self.tol) <= 0 or self.max_iters <= 0:
            raise ValueError("AdmmConfig fields must be positive")


@dataclass
class AdmmResult:
    c: np.ndarray
    converged: bool
    iterations: int
    primal_residual: float
    equality_residual: float = 0.0


def ssc(x, cfg):
    """Sparse self-expression: min ||C||_1 + (lam/2) ||X - XC||_F^2,
    diag(C) = 0, solved by ADMM with an auxiliary split."""
    x = np.asarray(x, dtype=float)
    n = x.shape[1]
    gram = x.T @ x
    rho = cfg.rho
    lhs_inv = np.linalg.inv(cfg.lam * gram + rho * np.eye(n))

    c = np.zeros((n, n))
    u = np.zeros((n, n))
    residual = np.inf
    it = 0
    for it in range(1, cfg.max_iters + 1):
        a = lhs_inv @ (cfg.lam * gram + rho * (c - u))
        c_prev = c
        c = soft_threshold(a + u, 1.0 / rho)
        np.fill_diagonal(c, 0.0)
        u = u + a - c
        residual = float(np.linalg.norm(a - c))
        if residual < cfg.tol:
            break
        # Residual balancing keeps the penalty in the regime where both
        # primal and dual residuals shrink at a useful rate.
        dual = rho * float(np.linalg.norm(c - c_prev))
        if residual > 10.0 * dual:
            rho *= 2.0
            u /= 2.0
            lhs_inv = np.linalg.inv(cfg.lam * gram + rho * np.eye(n))
        elif dual > 10.0 * residual:
            rho /= 2.0
            u *= 2.0
            lhs_inv = np.linalg.inv(cfg.lam * gram + rho * np.eye(n))
    np.fill_diagonal(c, 0.0)
    return AdmmResult(c=c, converged=residual < cfg.tol, iterations=it, primal_residual=residual)


def _shrink_columns(m, tau):
    """Proximal operator of the l2,1 norm: shrink column norms by tau."""
    norms = np.linalg.norm(m, axis=0)
    scale = np.where(norms > tau, (norms - tau) / np.where(norms > 0, norms, 1.0), 0.0)
    return m * scale


def lrr(x, cfg):
    """Low-rank self-expression: min ||C||_* + lam ||E||_{2,1}
    s.t. X = XC + E, via inexact augmented Lagrangian."""
    x = np.asarray(x, dtype=float)
    n = x.shape[1]
    xtx = x.T @ x
    c = np.zeros((n, n))
    j = np.zeros((n, n))
    e = np.zeros_like(x)
    y1 = np.zeros_like(x)
    y2 = np.zeros((n, n))
    mu, mu_max, growth = 1e-2, 1e10, 1.1

    residual = np.inf
    eq_residual = np.inf
    it = 0
    for it in range(1, cfg.max_iters + 1):
        j = singular_value_threshold(c + y2 / mu, 1.0 / mu)
        np.fill_diagonal(j, 0.0)
        lhs = np.eye(n) + xtx
        rhs = x.T @ (x - e) + j + (x.T @ y1 - y2) / mu
        c = np.linalg.solve(lhs, rhs)
        np.fill_diagonal(c, 0.0)
        xc = x @ c
        e = _shrink_columns(x - xc + y1 / mu, cfg.lam / mu)
        eq = x - xc - e
        y1 = y1 + mu * eq
        y2 = y2 + mu * (c - j)
        mu = min(mu * growth, mu_max)
        eq_residual = float(np.linalg.norm(eq))
        residual = float(np.linalg.norm(c - j))
        if max(residual, eq_residual) < cfg.tol:
            break
    np.fill_diagonal(c, 0.0)
    return AdmmResult(
        c=c,
        converged=max(residual, eq_residual) < cfg.tol,
        iterations=it,
        primal_residual=residual,
        equality_residual=eq_residual,
    )


def rtsc(x, num_clusters, points_per_cluster):
    """Angular nearest-neighbor affinity with q = max(floor(N_c/20), 3).

    Each point's q nearest neighbors under the arccos metric receive
    weight exp(-s); the graph is symmetrized by the entrywise maximum.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[1]
    norms = np.linalg.norm(x, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("rtsc requires nonzero columns")
    q = max(points_per_cluster // 20, 3)
    cosine = np.clip((x.T @ x) / np.outer(norms, norms), -1.0, 1.0)
    angles = np.arccos(cosine)
    np.fill_diagonal(angles, np.inf)

    w = np.zeros((n, n))
    order = np.argsort(angles, axis=1, kind="stable")[:, :q]
    rows = np.repeat(np.arange(n), q)
    cols = order.ravel()
    w[rows, cols] = np.exp(-angles[rows, cols])
    w = np.maximum(w, w.T)
    np.fill_diagonal(w, 0.0)
    return w


def run_baseline(name, ds, cfg=None, ipd_dim=None, seed=0):
    """Build the representation/affinity for a named baseline, cluster it,
    and score against the dataset's ground truth."""
    if ds.labels is None:
        raise ValueError("run_baseline requires ground-truth labels for scoring")
    if name == "rtsc":
        per_cluster = int(np.bincount(ds.labels).max())
        w = rtsc(ds.x, ds.num_clusters, per_cluster)
    elif name in ("ssc", "lrr"):
        if cfg is None:
            raise ValueError(f"{name} requires an AdmmConfig")
        result = ssc(ds.x, cfg) if name == "ssc" else lrr(ds.x, cfg)
        c = result.c
        if ipd_dim is not None:
            c = ipd_postprocess(c, ipd_dim)
        w = affinity_from_c(c)
    else:
        raise ValueError(f"unknown baseline {name!r}")
    indicator = spectral_cluster(w, ds.num_clusters, seed=seed)
    report = score(ds.labels, indicator.labels)
    return indicator.labels, report
