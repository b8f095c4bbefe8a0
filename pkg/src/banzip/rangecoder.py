"""Byte-oriented range coder over 16-bit quantized probability tables.

The coder is the bit-exactness boundary of the compressor: it consumes only
integer count tables, so encoder and decoder stay in lockstep as long as both
sides derive identical tables.  State is a 64-bit (low, range) pair; the range
is renormalized a byte at a time and never drops below 2**24 between symbols
(it is in fact kept at or above 2**56, which makes the per-symbol rounding
loss of ``range // total`` negligible: below 2**-40 bits).

Carries are propagated directly into the already-emitted byte buffer, walking
back through 0xFF bytes.  At flush time the encoder picks the value inside the
final interval with the most trailing zero bits and strips trailing zero bytes
from the 8-byte tail, so a stream never costs more than one byte beyond its
renormalization output.  The decoder mirrors this by treating up to 8 bytes
past the end of the payload as zeros; needing a 9th is a truncated stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TruncatedStreamError

PROB_BITS = 16
PROB_TOTAL = 1 << PROB_BITS  # 65536
_MASK = (1 << 64) - 1
_TOP = 1 << 56
_TAIL_BYTES = 8


@dataclass(frozen=True)
class QuantizedPMF:
    """256 integer counts summing to exactly 2**16, every count >= 1.

    ``cum`` is the cumulative table: cum[s] = sum of counts below s,
    cum[256] = 65536, strictly increasing because no count is zero.
    """

    counts: np.ndarray  # (256,) uint32
    cum: np.ndarray  # (257,) uint32

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> "QuantizedPMF":
        counts = np.asarray(counts, dtype=np.uint32)
        if counts.shape != (256,):
            raise ValueError(f"expected 256 counts, got shape {counts.shape}")
        if counts.min() < 1:
            raise ValueError("every symbol count must be >= 1")
        if int(counts.sum()) != PROB_TOTAL:
            raise ValueError(f"counts must sum to {PROB_TOTAL}, got {int(counts.sum())}")
        cum = np.zeros(257, dtype=np.uint32)
        np.cumsum(counts, out=cum[1:])
        return cls(counts=counts, cum=cum)

    def code_length_bits(self, symbol: int) -> float:
        """Ideal codelength of ``symbol`` under this table, in bits."""
        return PROB_BITS - float(np.log2(float(self.counts[symbol])))


def quantize(pmf: np.ndarray) -> QuantizedPMF:
    """Convert a float PMF over 256 symbols into integer counts totalling 2**16.

    Counts start at max(1, round(p * 65536)); the residual against 65536 is
    then settled by largest-remainder correction, ties broken toward the lower
    symbol index, never pushing a count below the floor of 1.  The floor keeps
    every byte decodable regardless of how confident the model is.
    """
    p = np.asarray(pmf, dtype=np.float64)
    if p.shape != (256,):
        raise ValueError(f"expected a 256-entry PMF, got shape {p.shape}")
    if p.min() < 0.0:
        raise ValueError("PMF entries must be nonnegative")
    total = float(p.sum())
    if not abs(total - 1.0) <= 1e-6:
        raise ValueError(f"PMF must sum to 1 within 1e-6, got {total}")

    ideal = p * PROB_TOTAL
    counts = np.floor(ideal + 0.5)
    np.maximum(counts, 1.0, out=counts)
    deficit = PROB_TOTAL - int(counts.sum())
    if deficit != 0:
        # remainder = how much each symbol still "deserves"; most deserving
        # first when adding, least deserving first when removing.
        remainder = ideal - counts
        if deficit > 0:
            order = np.lexsort((np.arange(256), -remainder))
            i = 0
            while deficit > 0:
                counts[order[i % 256]] += 1
                deficit -= 1
                i += 1
        else:
            order = np.lexsort((np.arange(256), remainder))
            i = 0
            while deficit < 0:
                s = order[i % 256]
                if counts[s] > 1:
                    counts[s] -= 1
                    deficit += 1
                i += 1
    return QuantizedPMF.from_counts(counts.astype(np.uint32))


class RangeEncoder:
    """Sequential encoder; one instance per stream."""

    def __init__(self):
        self.low = 0
        self.range = _MASK
        self._out = bytearray()
        self._finished = False

    def encode_symbol(self, symbol: int, q: QuantizedPMF) -> None:
        if self._finished:
            raise RuntimeError("encoder already finished")
        r = self.range >> PROB_BITS
        self.low += r * int(q.cum[symbol])
        self.range = r * int(q.counts[symbol])
        if self.low > _MASK:
            self._carry()
            self.low &= _MASK
        while self.range < _TOP:
            self._out.append(self.low >> 56)
            self.low = (self.low << 8) & _MASK
            self.range <<= 8

    def _carry(self) -> None:
        # Ripple +1 back through the emitted bytes; runs of 0xFF wrap to 0.
        i = len(self._out) - 1
        while True:
            assert i >= 0, "carry out of an empty buffer"
            self._out[i] = (self._out[i] + 1) & 0xFF
            if self._out[i] != 0:
                return
            i -= 1

    def finish(self) -> bytes:
        """Close the interval and return the payload bytes."""
        if self._finished:
            raise RuntimeError("encoder already finished")
        self._finished = True
        # Pick the number in [low, low + range) with the most trailing zeros:
        # any interval of width >= 2**j contains a multiple of 2**j.
        j = self.range.bit_length() - 1
        value = ((self.low + (1 << j) - 1) >> j) << j
        if value > _MASK:
            self._carry()
            value &= _MASK
        tail = value.to_bytes(_TAIL_BYTES, "big").rstrip(b"\x00")
        self._out.extend(tail)
        return bytes(self._out)


class RangeDecoder:
    """Sequential decoder over an encoder's payload.

    Tracks ``code`` as the offset of the coded value inside the current
    interval, which sidesteps carry bookkeeping entirely.
    """

    def __init__(self, payload: bytes):
        self._data = payload
        self._pos = 0
        self._past_end = 0
        self.range = _MASK
        self.code = 0
        for _ in range(_TAIL_BYTES):
            self.code = (self.code << 8) | self._next_byte()

    def _next_byte(self) -> int:
        if self._pos < len(self._data):
            b = self._data[self._pos]
            self._pos += 1
            return b
        self._past_end += 1
        if self._past_end > _TAIL_BYTES:
            raise TruncatedStreamError(
                f"coded stream exhausted after {len(self._data)} bytes"
            )
        return 0

    def decode_symbol(self, q: QuantizedPMF) -> int:
        r = self.range >> PROB_BITS
        value = self.code // r
        if value >= PROB_TOTAL:
            value = PROB_TOTAL - 1  # only reachable on corrupt input
        symbol = int(np.searchsorted(q.cum, value, side="right")) - 1
        self.code -= r * int(q.cum[symbol])
        self.range = r * int(q.counts[symbol])
        while self.range < _TOP:
            self.code = (self.code << 8) | self._next_byte()
            self.range <<= 8
        return symbol
