"""Trainable state: Gaussian hyperparameter pairs for every network scalar.

No network weight in this package is a free parameter.  Each scalar carries a
(mean, precision) pair; forward passes read the means, and the recursive
update rules move the means while only ever *increasing* the precisions.
The per-generated-weight standard deviations are stored as a bare precision
vector (they have no mean of their own: the mean of a generated weight is the
hypernetwork output).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class GaussianHyper:
    """Scalar (mean, precision) pair; precision = 1/sigma^2 > 0."""

    mean: float
    precision: float

    def __post_init__(self):
        if not self.precision > 0:
            raise ValueError(f"precision must be positive, got {self.precision}")

    @property
    def variance(self) -> float:
        return 1.0 / self.precision


@dataclass
class HyperArray:
    """Array-of-(mean, precision) for one parameter group."""

    means: np.ndarray
    precisions: np.ndarray

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64)
        self.precisions = np.asarray(self.precisions, dtype=np.float64)
        if self.means.shape != self.precisions.shape:
            raise ValueError("means/precisions shape mismatch")
        if self.precisions.size and self.precisions.min() <= 0:
            raise ValueError("precisions must be positive")

    @property
    def variances(self) -> np.ndarray:
        return 1.0 / self.precisions

    def copy(self) -> "HyperArray":
        return HyperArray(self.means.copy(), self.precisions.copy())


@dataclass(frozen=True)
class PredictorArch:
    """Shapes of the context-predictor network and its latent interface.

    Predictor: one-hot context bytes -> shared embedding (alphabet x embed_dim)
    -> concatenation over the ``ctx_len`` positions -> ``hidden_dim`` tanh
    units -> alphabet-way softmax.  The flat weight vector ``w`` packs, in
    order: embedding table, first-layer matrix, first-layer bias, output
    matrix, output bias.
    """

    ctx_len: int
    latent_dim: int
    alphabet: int = 256
    embed_dim: int = 16
    hidden_dim: int = 64

    def __post_init__(self):
        if self.ctx_len < 1:
            raise ConfigError("ctx_len must be >= 1")
        if self.latent_dim < 1:
            raise ConfigError("latent_dim must be >= 1")
        if not 2 <= self.alphabet <= 256:
            raise ConfigError("alphabet must be in [2, 256]")

    @property
    def input_dim(self) -> int:
        return self.ctx_len * self.embed_dim

    @property
    def n_weights(self) -> int:
        a, e, h = self.alphabet, self.embed_dim, self.hidden_dim
        return a * e + self.input_dim * h + h + h * a + a

    def weight_views(self, w: np.ndarray) -> "WeightViews":
        """Split a flat weight vector into named, reshaped views (no copies)."""
        a, e, h = self.alphabet, self.embed_dim, self.hidden_dim
        i = 0

        def take(n, shape):
            nonlocal i
            v = w[..., i : i + n]
            i += n
            return v.reshape(*w.shape[:-1], *shape)

        return WeightViews(
            emb=take(a * e, (a, e)),
            w1=take(self.input_dim * h, (self.input_dim, h)),
            b1=take(h, (h,)),
            w2=take(h * a, (h, a)),
            b2=take(a, (a,)),
        )


@dataclass
class WeightViews:
    emb: np.ndarray
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


@dataclass
class HyperNetParams:
    """The v-parameters: encoder posterior nets plus the latent-to-weights map.

    The encoder is a per-position table network: the posterior mean (and
    log-variance) of the latent code is the sum of one table row per context
    byte plus a bias, which keeps every gradient an exact gather/scatter.
    ``map_weight`` and ``map_bias`` form the affine map from latent code to
    predictor weights.  ``weight_precisions`` holds the generated weights'
    standard deviations in precision form.
    """

    enc_mean_tables: HyperArray  # (ctx_len, alphabet, latent_dim)
    enc_mean_bias: HyperArray  # (latent_dim,)
    enc_logvar_tables: HyperArray  # (ctx_len, alphabet, latent_dim)
    enc_logvar_bias: HyperArray  # (latent_dim,)
    map_weight: HyperArray  # (n_weights, latent_dim)
    map_bias: HyperArray  # (n_weights,)
    weight_precisions: np.ndarray = field(default=None)  # (n_weights,)

    GROUPS = (
        "enc_mean_tables",
        "enc_mean_bias",
        "enc_logvar_tables",
        "enc_logvar_bias",
        "map_weight",
        "map_bias",
    )

    def __post_init__(self):
        self.weight_precisions = np.asarray(self.weight_precisions, dtype=np.float64)
        if self.weight_precisions.min() <= 0:
            raise ValueError("weight precisions must be positive")

    def groups(self) -> list[tuple[str, HyperArray]]:
        return [(name, getattr(self, name)) for name in self.GROUPS]

    def mean_vector(self) -> np.ndarray:
        """All hyper-means flattened in declaration order (for gradient checks)."""
        return np.concatenate([g.means.ravel() for _, g in self.groups()])

    def set_mean_vector(self, vec: np.ndarray) -> None:
        i = 0
        for _, g in self.groups():
            n = g.means.size
            g.means[...] = vec[i : i + n].reshape(g.means.shape)
            i += n
        if i != vec.size:
            raise ValueError("mean vector length mismatch")

    def copy(self) -> "HyperNetParams":
        return HyperNetParams(
            *(getattr(self, name).copy() for name in self.GROUPS),
            weight_precisions=self.weight_precisions.copy(),
        )


@dataclass
class DecoderParams:
    """The u-parameters: the context-embedding tables behind the importance scores."""

    tables: HyperArray  # (ctx_len, alphabet, latent_dim)
    bias: HyperArray  # (latent_dim,)

    GROUPS = ("tables", "bias")

    def groups(self) -> list[tuple[str, HyperArray]]:
        return [(name, getattr(self, name)) for name in self.GROUPS]

    def mean_vector(self) -> np.ndarray:
        return np.concatenate([g.means.ravel() for _, g in self.groups()])

    def set_mean_vector(self, vec: np.ndarray) -> None:
        i = 0
        for _, g in self.groups():
            n = g.means.size
            g.means[...] = vec[i : i + n].reshape(g.means.shape)
            i += n
        if i != vec.size:
            raise ValueError("mean vector length mismatch")

    def copy(self) -> "DecoderParams":
        return DecoderParams(*(getattr(self, name).copy() for name in self.GROUPS))


def _hyper(rng: np.random.Generator, shape, mean_scale: float, precision: float) -> HyperArray:
    means = rng.uniform(-mean_scale, mean_scale, size=shape)
    return HyperArray(means, np.full(shape, precision))


def init_hyper_net(
    arch: PredictorArch,
    rng: np.random.Generator,
    mean_scale: float = 0.05,
    init_precision: float = 1.0,
    weight_precision: float = 100.0,
) -> HyperNetParams:
    l, a, d = arch.ctx_len, arch.alphabet, arch.latent_dim
    nw = arch.n_weights
    return HyperNetParams(
        enc_mean_tables=_hyper(rng, (l, a, d), mean_scale, init_precision),
        enc_mean_bias=_hyper(rng, (d,), mean_scale, init_precision),
        enc_logvar_tables=_hyper(rng, (l, a, d), mean_scale, init_precision),
        enc_logvar_bias=_hyper(rng, (d,), mean_scale, init_precision),
        map_weight=_hyper(rng, (nw, d), mean_scale, init_precision),
        map_bias=_hyper(rng, (nw,), mean_scale, init_precision),
        weight_precisions=np.full(nw, weight_precision),
    )


def init_decoder(
    arch: PredictorArch,
    rng: np.random.Generator,
    mean_scale: float = 0.05,
    init_precision: float = 1.0,
) -> DecoderParams:
    l, a, d = arch.ctx_len, arch.alphabet, arch.latent_dim
    return DecoderParams(
        tables=_hyper(rng, (l, a, d), mean_scale, init_precision),
        bias=_hyper(rng, (d,), mean_scale, init_precision),
    )
