"""Fully-connected autoencoder with per-layer representation capture.

Forward passes collect every post-activation encoder output so that losses
defined over all intermediate representations (distance preservation,
layer-wise self-expression) can be trained with analytic gradients. All
training is full-batch with Adam-style adaptive steps.
"""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from subclust.linalg import pairwise_l2

CHECKPOINT_VERSION = 1


class TrainingError(Exception):
    """Training diverged (loss became non-finite)."""


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    pretrain_epochs: int = 100
    max_finetune_epochs: int = 300
    q_refresh_period: int = 10
    delta: float = 0.01
    seed: int = 0
    dp_pair_sample: Optional[int] = None
    # Learning rate for updates of the representation matrix; the N x N
    # coefficient scale differs from the network weights' scale.
    c_learning_rate: float = 1e-2
    # Epochs before the affinity-based stopping rule is consulted; the rule
    # compares successive epsilon values and fires spuriously while the
    # affinity is still warming up from its zero initialization.
    stop_warmup_epochs: int = 100

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class AutoencoderParams:
    """Encoder/decoder weight-bias pairs; hidden activations, linear output."""

    encoder: list
    decoder: list
    activation: str = "relu"

    def copy(self):
        return AutoencoderParams(
            encoder=[(w.copy(), b.copy()) for w, b in self.encoder],
            decoder=[(w.copy(), b.copy()) for w, b in self.decoder],
            activation=self.activation,
        )

    def as_list(self):
        out = []
        for w, b in self.encoder + self.decoder:
            out.extend([w, b])
        return out

    def with_list(self, arrays):
        n_enc = len(self.encoder)
        pairs = [(arrays[2 * i], arrays[2 * i + 1]) for i in range(len(arrays) // 2)]
        return AutoencoderParams(
            encoder=pairs[:n_enc], decoder=pairs[n_enc:], activation=self.activation
        )


def default_layer_dims(input_dim, num_clusters, depth=3):
    """Geometric width decay from the input dimension to max(4K, 32)."""
    embed = max(4 * num_clusters, 32)
    dims = np.geomspace(input_dim, embed, depth + 1)
    return [int(round(v)) for v in dims]


def _activate(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    raise ValueError(f"unknown activation {kind!r}")


def _activate_deriv(z, kind):
    if kind == "relu":
        return (z > 0.0).astype(float)
    if kind == "tanh":
        return 1.0 - np.tanh(z) ** 2
    raise ValueError(f"unknown activation {kind!r}")


def init_params(layer_dims, seed=0, activation="relu"):
    """He-style fan-in scaled uniform weights, zero biases."""
    if len(layer_dims) < 2:
        raise ValueError("layer_dims needs at least an input and one layer")
    if any(d <= 0 for d in layer_dims):
        raise ValueError("layer dimensions must be positive")
    rng = np.random.default_rng(seed)
    encoder = []
    for d_in, d_out in zip(layer_dims[:-1], layer_dims[1:]):
        bound = np.sqrt(6.0 / d_in)
        w = rng.uniform(-bound, bound, size=(d_out, d_in))
        encoder.append((w, np.zeros(d_out)))
    decoder = []
    rev = layer_dims[::-1]
    for d_in, d_out in zip(rev[:-1], rev[1:]):
        bound = np.sqrt(6.0 / d_in)
        w = rng.uniform(-bound, bound, size=(d_out, d_in))
        decoder.append((w, np.zeros(d_out)))
    return AutoencoderParams(encoder=encoder, decoder=decoder, activation=activation)


def _forward_cache(p, x):
    x = np.asarray(x, dtype=float)
    if x.shape[0] != p.encoder[0][0].shape[1]:
        raise ValueError(
            f"input has {x.shape[0]} rows, encoder expects {p.encoder[0][0].shape[1]}"
        )
    enc_pre, stack = [], [x]
    a = x
    for w, b in p.encoder:
        z = w @ a + b[:, None]
        a = _activate(z, p.activation)
        enc_pre.append(z)
        stack.append(a)
    dec_pre, dec_act = [], [a]
    for j, (w, b) in enumerate(p.decoder):
        z = w @ dec_act[-1] + b[:, None]
        dec_pre.append(z)
        a_dec = z if j == len(p.decoder) - 1 else _activate(z, p.activation)
        dec_act.append(a_dec)
    return stack, enc_pre, dec_pre, dec_act


def forward_collect(p, x):
    """Run the autoencoder; returns ([X^0 .. X^{M/2}], reconstruction)."""
    stack, _, _, dec_act = _forward_cache(p, x)
    return stack, dec_act[-1]


def loss_re(x, reconstruction):
    """Mean reconstruction error (1/2N) ||X - X~||_F^2."""
    x = np.asarray(x, dtype=float)
    reconstruction = np.asarray(reconstruction, dtype=float)
    if x.shape != reconstruction.shape:
        raise ValueError("shape mismatch between input and reconstruction")
    n = x.shape[1]
    return float(np.sum((x - reconstruction) ** 2) / (2.0 * n))


def loss_dp(stack, h, variant="stress"):
    """Distance-preservation penalty over all layers (including the input).

    literal: sum_m sum_{i,j} H_ij * ||x_i^m - x_j^m||
    stress:  sum_m sum_{i<j} (||x_i^m - x_j^m|| - H_ij)^2
    """
    h = np.asarray(h, dtype=float)
    total = 0.0
    for layer in stack:
        if layer.shape[1] != h.shape[0]:
            raise ValueError("distance matrix size does not match point count")
        d = pairwise_l2(layer)
        if variant == "literal":
            total += float(np.sum(h * d))
        elif variant == "stress":
            total += float(np.sum(np.triu((d - h) ** 2, k=1)))
        else:
            raise ValueError(f"unknown dp variant {variant!r}")
    return total


def _dp_layer_grad(layer, h, variant):
    """Gradient of the per-layer dp term with respect to the layer columns."""
    d = pairwise_l2(layer)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(d > 0.0, 1.0 / d, 0.0)
    if variant == "literal":
        coef = 2.0 * h * inv
    else:
        coef = 2.0 * (d - h) * inv
    np.fill_diagonal(coef, 0.0)
    return layer * coef.sum(axis=0)[None, :] - layer @ coef


def _dp_sampled(stack, h, variant, pairs):
    """Unbiased sampled-pair estimate of the dp loss and layer gradients."""
    i_idx, j_idx = pairs
    n = h.shape[0]
    scale = (n * (n - 1)) / (2.0 * len(i_idx))
    loss = 0.0
    grads = []
    for layer in stack:
        diff = layer[:, i_idx] - layer[:, j_idx]
        d = np.linalg.norm(diff, axis=0)
        hij = h[i_idx, j_idx]
        inv = np.where(d > 0.0, 1.0 / d, 0.0)
        if variant == "literal":
            loss += 2.0 * scale * float(np.sum(hij * d))
            coef = 2.0 * scale * hij * inv
        else:
            loss += scale * float(np.sum((d - hij) ** 2))
            coef = 2.0 * scale * (d - hij) * inv
        g = np.zeros_like(layer)
        np.add.at(g.T, i_idx, (coef * diff).T)
        np.add.at(g.T, j_idx, -(coef * diff).T)
        grads.append(g)
    return loss, grads


def backprop(p, x, layer_grads=None, grad_recon=None, cache=None):
    """Backpropagate output and per-layer gradients to all parameters.

    layer_grads is an optional list aligned with the stack (index 0 is the
    raw input and is ignored for parameters). grad_recon is the loss
    gradient with respect to the reconstruction; None means the loss does
    not touch the decoder. Returns (encoder_grads, decoder_grads) as
    (dW, db) pair lists.
    """
    if cache is None:
        cache = _forward_cache(p, x)
    stack, enc_pre, dec_pre, dec_act = cache
    n_enc, n_dec = len(p.encoder), len(p.decoder)

    dec_grads = [None] * n_dec
    if grad_recon is not None:
        delta = np.asarray(grad_recon, dtype=float)
        for j in range(n_dec - 1, -1, -1):
            w, _ = p.decoder[j]
            dec_grads[j] = (delta @ dec_act[j].T, delta.sum(axis=1))
            delta = w.T @ delta
            if j > 0:
                delta = delta * _activate_deriv(dec_pre[j - 1], p.activation)
        g = delta
    else:
        dec_grads = [(np.zeros_like(w), np.zeros_like(b)) for w, b in p.decoder]
        g = np.zeros_like(stack[-1])

    if layer_grads is not None and layer_grads[n_enc] is not None:
        g = g + layer_grads[n_enc]
    enc_grads = [None] * n_enc
    for m in range(n_enc - 1, -1, -1):
        w, _ = p.encoder[m]
        delta = g * _activate_deriv(enc_pre[m], p.activation)
        enc_grads[m] = (delta @ stack[m].T, delta.sum(axis=1))
        g = w.T @ delta
        if layer_grads is not None and m > 0 and layer_grads[m] is not None:
            g = g + layer_grads[m]
    return enc_grads, dec_grads


def grad_pretrain(p, x, loss="re", h=None, dp_variant="stress", pairs=None):
    """Analytic gradient of the selected pre-training loss.

    Returns (loss_value, encoder_grads, decoder_grads). For the dp loss the
    decoder gradients are structurally zero. h must be the ambient pairwise
    distance matrix when loss == "dp".
    """
    cache = _forward_cache(p, x)
    stack, _, _, dec_act = cache
    if loss == "re":
        recon = dec_act[-1]
        value = loss_re(x, recon)
        grad_recon = (recon - x) / x.shape[1]
        enc_g, dec_g = backprop(p, x, grad_recon=grad_recon, cache=cache)
    elif loss == "dp":
        if h is None:
            raise ValueError("dp loss requires the precomputed distance matrix")
        if pairs is not None:
            value, layer_grads = _dp_sampled(stack, h, dp_variant, pairs)
        else:
            value = loss_dp(stack, h, dp_variant)
            layer_grads = [_dp_layer_grad(layer, h, dp_variant) for layer in stack]
        enc_g, dec_g = backprop(p, x, layer_grads=layer_grads, cache=cache)
    else:
        raise ValueError(f"unknown pretrain loss {loss!r}")
    return value, enc_g, dec_g


class Adam:
    """Adam over a flat list of parameter arrays."""

    def __init__(self, arrays, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(a) for a in arrays]
        self.v = [np.zeros_like(a) for a in arrays]
        self.t = 0

    def step(self, arrays, grads):
        self.t += 1
        out = []
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for i, (a, g) in enumerate(zip(arrays, grads)):
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g**2
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            out.append(a - self.lr * m_hat / (np.sqrt(v_hat) + self.eps))
        return out


def _grads_to_list(enc_g, dec_g):
    out = []
    for dw, db in enc_g + dec_g:
        out.extend([dw, db])
    return out


def pretrain(p, x, loss, cfg):
    """Minimize the selected pre-training loss for cfg.pretrain_epochs."""
    if cfg.pretrain_epochs == 0:
        return p.copy()
    p = p.copy()
    x = np.asarray(x, dtype=float)
    h = pairwise_l2(x) if loss == "dp" else None
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(p.as_list(), cfg.learning_rate)
    n = x.shape[1]
    for epoch in range(cfg.pretrain_epochs):
        pairs = None
        if loss == "dp" and cfg.dp_pair_sample is not None:
            i_idx = rng.integers(0, n, size=cfg.dp_pair_sample)
            j_idx = rng.integers(0, n - 1, size=cfg.dp_pair_sample)
            j_idx = np.where(j_idx >= i_idx, j_idx + 1, j_idx)
            pairs = (i_idx, j_idx)
        value, enc_g, dec_g = grad_pretrain(p, x, loss, h=h, pairs=pairs)
        if not np.isfinite(value):
            raise TrainingError(f"pre-training loss diverged at epoch {epoch}")
        p = p.with_list(opt.step(p.as_list(), _grads_to_list(enc_g, dec_g)))
    return p


def save_params(p, path):
    """Write parameters as a versioned JSON checkpoint."""
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "kind": "autoencoder",
        "activation": p.activation,
        "encoder": [{"w": w.tolist(), "b": b.tolist()} for w, b in p.encoder],
        "decoder": [{"w": w.tolist(), "b": b.tolist()} for w, b in p.decoder],
    }
    with open(path, "w") as f:
        json.dump(payload, f)


def load_params(path):
    with open(path) as f:
        payload = json.load(f)
    if payload.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version in {path}")
    if payload.get("kind") != "autoencoder":
        raise ValueError(f"{path} is not an autoencoder checkpoint")
    enc = [(np.array(d["w"]), np.array(d["b"])) for d in payload["encoder"]]
    dec = [(np.array(d["w"]), np.array(d["b"])) for d in payload["decoder"]]
    return AutoencoderParams(encoder=enc, decoder=dec, activation=payload["activation"])
