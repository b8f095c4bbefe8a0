"""Byte sequences as streams of (context, target) samples.

A byte stream is modelled as a product of per-position conditional
probabilities, each conditioned on a fixed-length window of the ``l``
preceding bytes.  Positions before the start of the stream are padded
with zero bytes, so every sample carries a context of exactly ``l``
symbols and decoding can rebuild contexts symmetrically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, ModelDefectError

ALPHABET = 256
PAD_SYMBOL = 0


@dataclass(frozen=True)
class Sample:
    """One training/prediction unit: ``l`` context bytes and the byte they precede."""

    context: bytes
    target: int
    index: int

    def __post_init__(self):
        if not 0 <= self.target < ALPHABET:
            raise ValueError(f"target {self.target} outside byte range")


def make_samples(sequence: Sequence[int] | bytes, l: int) -> list[Sample]:
    """Split a byte sequence into one sample per position.

    Sample ``n`` gets the ``l`` bytes preceding position ``n`` as context,
    left-padded with zero bytes where the sequence does not reach back far
    enough.  Reading the targets back in index order is the identity.
    """
    if l < 1:
        raise ConfigError(f"context length must be >= 1, got {l}")
    data = bytes(sequence)
    padded = bytes(l) + data
    return [
        Sample(context=padded[n : n + l], target=data[n], index=n)
        for n in range(len(data))
    ]


def samples_to_arrays(sequence: Sequence[int] | bytes, l: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized form of :func:`make_samples`: (contexts (N,l) uint8, targets (N,) uint8)."""
    if l < 1:
        raise ConfigError(f"context length must be >= 1, got {l}")
    data = np.frombuffer(bytes(sequence), dtype=np.uint8)
    if data.size == 0:
        return np.zeros((0, l), dtype=np.uint8), data
    padded = np.concatenate([np.zeros(l, dtype=np.uint8), data])
    contexts = np.lib.stride_tricks.sliding_window_view(padded[:-1], l)
    return np.ascontiguousarray(contexts), data


def sequence_log2_prob(per_symbol_probs: Iterable[float]) -> float:
    """Information content in bits: ``-sum(log2 p_n)`` over the per-symbol model probabilities.

    Additive over concatenation.  A zero (or negative) probability is a model
    defect: the pipeline's quantization floor guarantees every byte keeps
    nonzero probability, so this can only happen if the model is broken.
    """
    bits = 0.0
    for n, p in enumerate(per_symbol_probs):
        if not p > 0.0:
            raise ModelDefectError(f"non-positive symbol probability {p} at position {n}")
        if p > 1.0:
            raise ModelDefectError(f"symbol probability {p} > 1 at position {n}")
        bits -= math.log2(p)
    return bits
