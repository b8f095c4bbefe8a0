"""Latent-space encoder/decoder and per-sample importance factors.

The encoder maps a context to a diagonal-Gaussian posterior over latent
codes.  The decoder scores a context against a latent code with
``exp(<embed(context), z>)``; the log-score is bilinear in (parameters, z),
so the importance derivative used by the attention update is exact.
Importance factors are the batch-normalized decoder scores: nonnegative,
summing to the batch size, invariant under rescaling all scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import DecoderParams, HyperNetParams, PredictorArch
from .predictor import loss_and_grad
from .samples import Sample

LOG_SCORE_CLAMP = 30.0
LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class EncoderPosterior:
    """Diagonal Gaussian q(z | context): mean and per-dimension variance."""

    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self):
        if self.variance.min() <= 0:
            raise ValueError("posterior variances must be positive")


def _ctx_index(context) -> np.ndarray:
    ctx = np.asarray(bytearray(context) if isinstance(context, (bytes, bytearray)) else context)
    return ctx.astype(np.intp)


def encode(context, v: HyperNetParams) -> EncoderPosterior:
    """Posterior over latent codes for one context; deterministic in (context, means of v)."""
    ctx = _ctx_index(context)
    pos = np.arange(ctx.size)
    mean = v.enc_mean_tables.means[pos, ctx, :].sum(axis=0) + v.enc_mean_bias.means
    logvar = v.enc_logvar_tables.means[pos, ctx, :].sum(axis=0) + v.enc_logvar_bias.means
    return EncoderPosterior(mean=mean, variance=np.exp(logvar))


def encode_batch(contexts: np.ndarray, v: HyperNetParams) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means and log-variances for a batch of contexts (n, l)."""
    idx = contexts.astype(np.intp)
    pos = np.arange(idx.shape[1])
    mean = v.enc_mean_tables.means[pos, idx, :].sum(axis=1) + v.enc_mean_bias.means
    logvar = v.enc_logvar_tables.means[pos, idx, :].sum(axis=1) + v.enc_logvar_bias.means
    return mean, logvar


def sample_z(post: EncoderPosterior, noise: np.ndarray) -> np.ndarray:
    """Reparameterized draw z = mean + sqrt(variance) * noise."""
    return post.mean + np.sqrt(post.variance) * np.asarray(noise, dtype=np.float64)


def decoder_embed(contexts: np.ndarray, u: DecoderParams) -> np.ndarray:
    """Context embeddings (n, d) from the per-position tables."""
    idx = contexts.astype(np.intp)
    pos = np.arange(idx.shape[1])
    return u.tables.means[pos, idx, :].sum(axis=1) + u.bias.means


def decoder_log_score(context, z: np.ndarray, u: DecoderParams) -> float:
    """Log of the unnormalized decoder score; clamped so exp never overflows."""
    emb = decoder_embed(_ctx_index(context)[None, :], u)[0]
    return float(np.clip(emb @ z, -LOG_SCORE_CLAMP, LOG_SCORE_CLAMP))


def decoder_score(context, z: np.ndarray, u: DecoderParams) -> float:
    """Unnormalized positive score of a context given a latent code."""
    return math.exp(decoder_log_score(context, z, u))


def batch_scores(contexts: np.ndarray, z: np.ndarray, u: DecoderParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(scores, embeddings, clamp-active mask) for a batch of contexts."""
    embs = decoder_embed(contexts, u)
    raw = embs @ z
    clipped = np.clip(raw, -LOG_SCORE_CLAMP, LOG_SCORE_CLAMP)
    active = (raw > -LOG_SCORE_CLAMP) & (raw < LOG_SCORE_CLAMP)
    return np.exp(clipped), embs, active


def importance(scores: np.ndarray) -> np.ndarray:
    """Normalized importance: rho_i = n * score_i / sum(scores); sums to n."""
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or s.size < 1:
        raise ValueError("scores must be a nonempty 1-d array")
    if s.min() <= 0:
        raise ValueError("scores must be strictly positive")
    return s.size * s / s.sum()


def log_prior(z: np.ndarray) -> float:
    """Standard-normal log density of the latent code."""
    return float(-0.5 * z.size * LOG_2PI - 0.5 * (z @ z))


def log_q(z: np.ndarray, post: EncoderPosterior) -> float:
    """Log density of the encoder posterior at z."""
    d = (z - post.mean) ** 2 / post.variance
    return float(-0.5 * (z.size * LOG_2PI + np.log(post.variance).sum() + d.sum()))


def regularizer(context, z: np.ndarray, u: DecoderParams, v: HyperNetParams) -> float:
    """Variational regularizer: ln score(context|z) + ln N(z; 0, I) - ln q(z|context).

    Zero whenever the decoder score is 1 and the posterior matches the prior
    at z.  The latent prior is a standard normal.
    """
    post = encode(context, v)
    return decoder_log_score(context, z, u) + log_prior(z) - log_q(z, post)


def loss_correlation(
    grad_w_train: np.ndarray,
    grad_w_test: np.ndarray,
    sigma_w_sq: np.ndarray,
    k: int,
) -> float:
    """Correlation scalar between train and test losses through the weight scales:
    sum_j sigma_wj^2 / k * dl_train/dw_j * dl_test/dw_j."""
    return float(np.sum(sigma_w_sq * grad_w_train * grad_w_test) / k)


def importance_grad_u(
    contexts: np.ndarray,
    z: np.ndarray,
    u: DecoderParams,
    i: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact derivative of rho_i with respect to the u-means.

    Returns (table gradient with the tables' shape, bias gradient).  The
    log-score of sample j depends on row [p, context_j[p]] of each table and
    on the bias, each with coefficient z; the softmax-style normalization of
    rho distributes the weight rho_i * (delta_ij - rho_j / n) over samples.
    """
    scores, _, active = batch_scores(contexts, z, u)
    rho = importance(scores)
    n = rho.size
    coef = -rho[i] * rho / n
    coef[i] += rho[i]
    coef = coef * active  # clamp saturates the score: zero derivative there

    idx = contexts.astype(np.intp)
    g_tables = np.zeros_like(u.tables.means)
    outer = coef[:, None] * z[None, :]  # (n, d)
    for p in range(idx.shape[1]):
        np.add.at(g_tables[p], idx[:, p], outer)
    g_bias = outer.sum(axis=0)
    return g_tables, g_bias


def attention_grad_u(
    train_sample: Sample | tuple,
    test_sample: Sample | tuple,
    w: np.ndarray,
    sigma_w_sq: np.ndarray,
    rho_grad_u: tuple[np.ndarray, np.ndarray],
    k: int,
    arch: PredictorArch,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Attention gradient: the train/test loss correlation times d rho_i / du.

    Both loss gradients are evaluated at the same sampled weights.  Returns
    (correlation scalar, table gradient, bias gradient).
    """
    _, gw_train = loss_and_grad(train_sample, w, arch)
    _, gw_test = loss_and_grad(test_sample, w, arch)
    c = loss_correlation(gw_train, gw_test, sigma_w_sq, k)
    g_tables, g_bias = rho_grad_u
    return c, c * g_tables, c * g_bias
