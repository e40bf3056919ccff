"""Joint representation matrix learning and post-processing.

Holds the layer-wise self-expression loss, the clustering-quality loss,
the two fine-tuning stages, the oracle composite mode, leading-coefficient
post-processing, the affinity-based stopping rule, and the
subspace-preserving diagnostic.
"""

import json
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from subclust.autoencoder import (
    CHECKPOINT_VERSION,
    Adam,
    TrainingError,
    _forward_cache,
    backprop,
    grad_pretrain,
)
from subclust.linalg import pairwise_l2
from subclust.spectral import affinity_from_c, spectral_cluster


@dataclass
class OracleWeights:
    """Externally supplied loss weights for the composite oracle mode."""

    lambda1: float
    lambda2: float

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("oracle weights must be nonnegative")


@dataclass
class StoppingState:
    """Tracks successive affinity discrepancies for the stopping rule."""

    delta: float
    n: int
    previous_affinity: Optional[np.ndarray] = None
    epsilon_history: list = field(default_factory=list)


def stopping_check(state, w):
    """Affinity-change stopping rule.

    epsilon_t is the Frobenius distance between successive affinity
    matrices; training stops when |eps_t - eps_{t-1}| / N <= delta. The
    first call only records the affinity and never stops.
    """
    w = np.asarray(w, dtype=float)
    if state.previous_affinity is None:
        state.previous_affinity = w.copy()
        return False, state
    eps = float(np.linalg.norm(w - state.previous_affinity))
    state.previous_affinity = w.copy()
    state.epsilon_history.append(eps)
    if len(state.epsilon_history) < 2:
        return False, state
    change = abs(state.epsilon_history[-1] - state.epsilon_history[-2]) / state.n
    return change <= state.delta, state


def _check_c(stack, c):
    n = stack[0].shape[1]
    c = np.asarray(c, dtype=float)
    if c.shape != (n, n):
        raise ValueError(f"representation matrix must be {n}x{n}, got {c.shape}")
    return c


def loss_se_joint(stack, c):
    """Layer-wise self-expression loss: sum_m ||X^m - X^m C||_F^2.

    The sum includes the raw-input layer m = 0.
    """
    c = _check_c(stack, c)
    total = 0.0
    for layer in stack:
        total += float(np.sum((layer - layer @ c) ** 2))
    return total


def loss_se_last(stack, c):
    """Self-expression loss on the encoder output layer only."""
    c = _check_c(stack, c)
    layer = stack[-1]
    return float(np.sum((layer - layer @ c) ** 2))


def _se_eval(stack, c, variant, with_layer_grads=False):
    """Loss, gradient wrt C, and optional per-layer gradients wrt the stack."""
    c = _check_c(stack, c)
    layers = stack if variant == "joint" else [stack[-1]]
    value = 0.0
    grad_c = np.zeros_like(c)
    layer_grads = [None] * len(stack) if with_layer_grads else None
    i_minus_c_t = (np.eye(c.shape[0]) - c).T if with_layer_grads else None
    for pos, layer in enumerate(stack):
        if variant == "last" and pos != len(stack) - 1:
            continue
        residual = layer - layer @ c
        value += float(np.sum(residual**2))
        grad_c -= 2.0 * layer.T @ residual
        if with_layer_grads and pos > 0:
            layer_grads[pos] = 2.0 * residual @ i_minus_c_t
    return value, grad_c, layer_grads


def _pair_penalty(q):
    """p_ij = ||q_i - q_j||^2 / 2 for one-hot rows (1 across clusters, else 0)."""
    q = np.asarray(q, dtype=float)
    sq = np.sum(q**2, axis=1)
    return 0.5 * np.maximum(sq[:, None] + sq[None, :] - 2.0 * q @ q.T, 0.0)


def loss_q(c, q):
    """Clustering-quality loss sum_ij |c_ij| ||q_i - q_j||^2 / 2."""
    c = np.asarray(c, dtype=float)
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != c.shape[0]:
        raise ValueError("indicator shape does not match representation matrix")
    rowsum = q.sum(axis=1)
    if not np.all((q == 0.0) | (q == 1.0)) or not np.all(rowsum == 1.0):
        raise ValueError("indicator must be binary with exactly one 1 per row")
    return float(np.sum(np.abs(c) * _pair_penalty(q)))


def loss_q_trace(c, q):
    """Same loss via tr(Q^T L_C Q) with w_ij = (|c_ij| + |c_ji|) / 2."""
    w = 0.5 * (np.abs(c) + np.abs(np.asarray(c).T))
    lap = np.diag(w.sum(axis=1)) - w
    q = np.asarray(q, dtype=float)
    return float(np.trace(q.T @ lap @ q))


def grad_loss_q(c, q):
    """Subgradient sign(c_ij) ||q_i - q_j||^2 / 2, taken as 0 at c_ij = 0."""
    return np.sign(c) * _pair_penalty(q)


def _zero_diag(c):
    np.fill_diagonal(c, 0.0)
    return c


def _encoder_arrays(p):
    out = []
    for w, b in p.encoder:
        out.extend([w, b])
    return out


def _with_encoder_arrays(p, arrays):
    pairs = [(arrays[2 * i], arrays[2 * i + 1]) for i in range(len(arrays) // 2)]
    p.encoder = pairs
    return p


def finetune_stage1(p, c, x, cfg, variant="joint", log=None):
    """First fine-tuning stage: alternate C-step and encoder-step on the
    self-expression loss, stopping on the affinity rule or the epoch cap."""
    p = p.copy()
    c = np.asarray(c, dtype=float).copy()
    if cfg.max_finetune_epochs == 0:
        return p, c
    x = np.asarray(x, dtype=float)
    opt_c = Adam([c], cfg.c_learning_rate)
    opt_p = Adam(_encoder_arrays(p), cfg.learning_rate)
    state = StoppingState(delta=cfg.delta, n=x.shape[1])
    for epoch in range(cfg.max_finetune_epochs):
        cache = _forward_cache(p, x)
        stack = cache[0]
        value, grad_c, _ = _se_eval(stack, c, variant)
        if not np.isfinite(value):
            raise TrainingError(f"stage-1 loss diverged at epoch {epoch}")
        (c,) = opt_c.step([c], [grad_c])
        _zero_diag(c)
        _, _, layer_grads = _se_eval(stack, c, variant, with_layer_grads=True)
        enc_g, _ = backprop(p, x, layer_grads=layer_grads, cache=cache)
        flat_g = []
        for dw, db in enc_g:
            flat_g.extend([dw, db])
        p = _with_encoder_arrays(p, opt_p.step(_encoder_arrays(p), flat_g))
        stop, state = stopping_check(state, affinity_from_c(c))
        if stop and epoch + 1 >= cfg.stop_warmup_epochs:
            break
    if log is not None:
        log["epochs"] = epoch + 1
        log["epsilon_history"] = list(state.epsilon_history)
    return p, c


def finetune_stage2(p, c, x, num_clusters, cfg, log=None):
    """Second fine-tuning stage: shrink cross-cluster coefficients by
    descending the clustering-quality loss with periodically refreshed
    spectral assignments. Only C is updated."""
    c = np.asarray(c, dtype=float).copy()
    if cfg.max_finetune_epochs == 0:
        return c
    opt = Adam([c], cfg.c_learning_rate)
    state = StoppingState(delta=cfg.delta, n=c.shape[0])
    indicator = None
    for epoch in range(cfg.max_finetune_epochs):
        if epoch % cfg.q_refresh_period == 0:
            indicator = spectral_cluster(affinity_from_c(c), num_clusters, seed=cfg.seed)
        value = loss_q(c, indicator.q)
        if not np.isfinite(value):
            raise TrainingError(f"stage-2 loss diverged at epoch {epoch}")
        (c,) = opt.step([c], [grad_loss_q(c, indicator.q)])
        _zero_diag(c)
        stop, state = stopping_check(state, affinity_from_c(c))
        if stop and epoch + 1 >= cfg.stop_warmup_epochs:
            break
    if log is not None:
        log["epochs"] = epoch + 1
        log["epsilon_history"] = list(state.epsilon_history)
    return c


def oracle_train(p, c, x, weights, pretrain_loss, cfg, num_clusters=None, log=None):
    """Composite mode: jointly minimize the pre-training loss plus weighted
    self-expression and clustering-quality losses. The only mode that
    accepts externally supplied hyperparameters."""
    p = p.copy()
    c = np.asarray(c, dtype=float).copy()
    x = np.asarray(x, dtype=float)
    h = pairwise_l2(x) if pretrain_loss == "dp" else None
    opt_p = Adam(p.as_list(), cfg.learning_rate)
    opt_c = Adam([c], cfg.c_learning_rate)
    state = StoppingState(delta=cfg.delta, n=x.shape[1])
    indicator = None
    for epoch in range(cfg.max_finetune_epochs):
        if weights.lambda2 > 0 and epoch % cfg.q_refresh_period == 0:
            if num_clusters is None:
                raise ValueError("oracle mode with lambda2 > 0 needs num_clusters")
            indicator = spectral_cluster(affinity_from_c(c), num_clusters, seed=cfg.seed)

        cache = _forward_cache(p, x)
        stack = cache[0]
        l0, enc_g0, dec_g0 = grad_pretrain(p, x, pretrain_loss, h=h)
        total = l0
        grad_c = np.zeros_like(c)
        layer_grads = None
        if weights.lambda1 > 0:
            se, se_grad_c, layer_grads = _se_eval(stack, c, "joint", with_layer_grads=True)
            total += weights.lambda1 * se
            grad_c += weights.lambda1 * se_grad_c
            layer_grads = [
                None if g is None else weights.lambda1 * g for g in layer_grads
            ]
        if weights.lambda2 > 0:
            total += weights.lambda2 * loss_q(c, indicator.q)
            grad_c += weights.lambda2 * grad_loss_q(c, indicator.q)
        if not np.isfinite(total):
            raise TrainingError(f"oracle loss diverged at epoch {epoch}")

        enc_g1, _ = backprop(p, x, layer_grads=layer_grads, cache=cache)
        flat = []
        for (dw0, db0), (dw1, db1) in zip(enc_g0, enc_g1):
            flat.extend([dw0 + dw1, db0 + db1])
        for dw, db in dec_g0:
            flat.extend([dw, db])
        p = p.with_list(opt_p.step(p.as_list(), flat))
        (c,) = opt_c.step([c], [grad_c])
        _zero_diag(c)
        stop, state = stopping_check(state, affinity_from_c(c))
        if stop and epoch + 1 >= cfg.stop_warmup_epochs:
            break
    if log is not None:
        log["epochs"] = epoch + 1
        log["epsilon_history"] = list(state.epsilon_history)
    return c


def ipd_postprocess(c, d):
    """Keep the d largest-magnitude entries in every column, zero the rest."""
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    if not 1 <= d < n:
        raise ValueError(f"d={d} out of range for N={n}")
    out = np.zeros_like(c)
    keep = np.argpartition(np.abs(c), n - d, axis=0)[n - d :, :]
    cols = np.arange(n)[None, :].repeat(d, axis=0)
    out[keep, cols] = c[keep, cols]
    _zero_diag(out)
    return out


def subspace_preserving_rate(c, labels):
    """Fraction of absolute coefficient mass between same-label points."""
    c = np.asarray(c, dtype=float)
    labels = np.asarray(labels, dtype=int)
    total = float(np.sum(np.abs(c)))
    if total == 0.0:
        warnings.warn("subspace_preserving_rate of an all-zero matrix is 0")
        return 0.0
    same = labels[:, None] == labels[None, :]
    return float(np.sum(np.abs(c)[same])) / total


def save_representation(c, path):
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "kind": "representation",
        "n": int(np.asarray(c).shape[0]),
        "c": np.asarray(c).tolist(),
    }
    with open(path, "w") as f:
        json.dump(payload, f)


def load_representation(path):
    with open(path) as f:
        payload = json.load(f)
    if payload.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version in {path}")
    if payload.get("kind") != "representation":
        raise ValueError(f"{path} is not a representation checkpoint")
    return np.array(payload["c"], dtype=float)
