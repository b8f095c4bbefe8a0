"""Context-predictor networks with weights generated from the latent code.

``weight_stats`` maps a latent code through the affine hypernetwork to the
per-weight Gaussian (mean, std); ``sample_weights`` is the reparameterized
draw; ``predict``/``loss_and_grad`` run the predictor itself with exact
hand-derived gradients.  Everything on the prediction path uses
``np.einsum(optimize=False)`` so that a batch row and a single-sample call
reduce in the same order and agree bit-for-bit; the lossless pipeline relies
on that.
"""

from __future__ import annotations

import numpy as np

from .errors import ModelDefectError
from .params import HyperNetParams, PredictorArch
from .samples import Sample


def weight_stats(z: np.ndarray, v: HyperNetParams) -> tuple[np.ndarray, np.ndarray]:
    """Per-weight Gaussian statistics at latent code ``z``: (mu_w, sigma_w).

    The mean is the affine hypernetwork output; the standard deviation is the
    latent-independent per-weight scale stored in precision form.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (v.map_weight.means.shape[1],):
        raise ValueError(f"latent code has shape {z.shape}, expected ({v.map_weight.means.shape[1]},)")
    mu_w = np.einsum("wd,d->w", v.map_weight.means, z, optimize=False) + v.map_bias.means
    sigma_w = 1.0 / np.sqrt(v.weight_precisions)
    return mu_w, sigma_w


def sample_weights(stats: tuple[np.ndarray, np.ndarray], noise: np.ndarray) -> np.ndarray:
    """Reparameterized draw: w = mu_w + sigma_w * noise."""
    mu_w, sigma_w = stats
    return mu_w + sigma_w * np.asarray(noise, dtype=np.float64)


def _context_array(context, arch: PredictorArch) -> np.ndarray:
    ctx = np.asarray(bytearray(context) if isinstance(context, (bytes, bytearray)) else context)
    if ctx.shape != (arch.ctx_len,):
        raise ValueError(f"context length {ctx.shape} does not match ctx_len={arch.ctx_len}")
    return ctx.astype(np.intp)


def forward_logits(contexts: np.ndarray, w: np.ndarray, arch: PredictorArch) -> np.ndarray:
    """Batched predictor forward: contexts (n, l) with per-sample weights w (n, n_weights).

    Returns logits (n, alphabet).
    """
    views = arch.weight_views(w)
    n = contexts.shape[0]
    rows = np.arange(n)[:, None]
    x = views.emb[rows, contexts, :].reshape(n, arch.input_dim)
    h = np.tanh(np.einsum("ni,nih->nh", x, views.w1, optimize=False) + views.b1)
    logits = np.einsum("nh,nha->na", h, views.w2, optimize=False) + views.b2
    return logits


def log_softmax(logits: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(logits)):
        raise ModelDefectError("non-finite predictor logits")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def predict(context, w: np.ndarray, arch: PredictorArch) -> np.ndarray:
    """PMF over the alphabet for one context under weights ``w``."""
    ctx = _context_array(context, arch)
    logits = forward_logits(ctx[None, :], w[None, :], arch)
    return np.exp(log_softmax(logits))[0]


def loss_and_grad(sample: Sample | tuple, w: np.ndarray, arch: PredictorArch) -> tuple[float, np.ndarray]:
    """Cross-entropy loss (nats) of the sample's target and its exact gradient in w."""
    if isinstance(sample, Sample):
        context, target = sample.context, sample.target
    else:
        context, target = sample
    ctx = _context_array(context, arch)

    views = arch.weight_views(w)
    x = views.emb[ctx, :].reshape(arch.input_dim)
    pre = x @ views.w1 + views.b1
    h = np.tanh(pre)
    logits = h @ views.w2 + views.b2
    logp = log_softmax(logits)
    loss = -float(logp[target])

    p = np.exp(logp)
    dlogits = p.copy()
    dlogits[target] -= 1.0

    grad = np.zeros_like(w)
    g = arch.weight_views(grad)
    np.outer(h, dlogits, out=g.w2)
    g.b2[...] = dlogits
    dh = views.w2 @ dlogits
    dpre = (1.0 - h * h) * dh
    np.outer(x, dpre, out=g.w1)
    g.b1[...] = dpre
    dx = (views.w1 @ dpre).reshape(arch.ctx_len, arch.embed_dim)
    np.add.at(g.emb, ctx, dx)
    return loss, grad


def losses_only(contexts: np.ndarray, targets: np.ndarray, w: np.ndarray, arch: PredictorArch) -> np.ndarray:
    """Cross-entropy losses (nats) of many samples under one shared weight vector."""
    views = arch.weight_views(w)
    n = contexts.shape[0]
    x = views.emb[contexts.astype(np.intp), :].reshape(n, arch.input_dim)
    h = np.tanh(x @ views.w1 + views.b1)
    logits = h @ views.w2 + views.b2
    logp = log_softmax(logits)
    return -logp[np.arange(n), targets.astype(np.intp)]


def backprop_to_v(
    sample: Sample | tuple,
    z: np.ndarray,
    noise: np.ndarray,
    v: HyperNetParams,
    arch: PredictorArch,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pull the sample's loss gradient back through w = mu_w(z, v) + sigma_w * noise.

    Returns (grad over map_weight means, grad over map_bias means, grad_w).
    The weight scales enter the forward pass only through the fixed noise, so
    the mean-parameter gradient is the exact affine pullback of grad_w.
    """
    w = sample_weights(weight_stats(z, v), noise)
    _, grad_w = loss_and_grad(sample, w, arch)
    grad_map_weight = np.outer(grad_w, z)
    grad_map_bias = grad_w
    return grad_map_weight, grad_map_bias, grad_w
