"""Stochastic-computing primitives.

Bernoulli rate encoding, a 16-bit maximal-length LFSR, AND multiplication
and the count-to-Bernoulli re-encoder used inside the attention array.

PRNG
----
Fibonacci LFSR over x^16 + x^15 + x^13 + x^4 + 1.  One *bit shift* is::

    fb    = s[0] ^ s[1] ^ s[3] ^ s[12]
    state = (state >> 1) | (fb << 15)

One *draw* returns the current 16-bit state as the random word and then
applies 16 bit shifts, so consecutive words do not overlap.  Because
gcd(16, 2^16 - 1) = 1 the draw map is itself a single cycle of length
2^16 - 1 over the non-zero states.

Seed derivation
---------------
``derive_seed(g, m, r, c)`` chains the SplitMix64 finaliser::

    h = mix64(g); h = mix64(h ^ m); h = mix64(h ^ r); h = mix64(h ^ c)
    seed = h % 65535 + 1

with ``mix64(x)``: ``x += 0x9E3779B97F4A7C15; x = (x ^ x>>30) * 0xBF58476D1CE4E5B9;
x = (x ^ x>>27) * 0x94D049BB133111EB; x ^= x>>31`` (all mod 2^64).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import is_power_of_two
from .exceptions import ConfigurationError, CounterOverflowError

WORD_BITS = 16
WORD_SPAN = 1 << WORD_BITS  # 65536
LFSR_PERIOD = WORD_SPAN - 1
TAPS = (16, 15, 13, 4)
_MASK64 = (1 << 64) - 1

# encoder module ids used when deriving seeds
MODULE_INPUT = 0
MODULE_SCORE = 1
MODULE_ATTN = 2
MODULE_Q = 3
MODULE_K = 4
MODULE_V = 5
MODULE_ROW = 6


def _shift(state: int) -> int:
    fb = (state ^ (state >> 1) ^ (state >> 3) ^ (state >> 12)) & 1
    return (state >> 1) | (fb << 15)


def _advance_word(state: int) -> int:
    for _ in range(WORD_BITS):
        state = _shift(state)
    return state


def _build_step_table() -> np.ndarray:
    states = np.arange(WORD_SPAN, dtype=np.uint32)
    for _ in range(WORD_BITS):
        fb = (states ^ (states >> 1) ^ (states >> 3) ^ (states >> 12)) & 1
        states = (states >> 1) | (fb << 15)
    return states.astype(np.uint32)


STEP_TABLE = _build_step_table()


def _build_cycle():
    order = np.empty(LFSR_PERIOD, dtype=np.uint32)
    state = 1
    for k in range(LFSR_PERIOD):
        order[k] = state
        state = STEP_TABLE[state]
    position = np.zeros(WORD_SPAN, dtype=np.int64)
    position[order] = np.arange(LFSR_PERIOD)
    return order, position


_CYCLE = None


def lfsr_sequence(seed: int, count: int) -> np.ndarray:
    """The ``count`` words drawn from an LFSR seeded with ``seed``, in order."""
    global _CYCLE
    if _CYCLE is None:
        _CYCLE = _build_cycle()
    order, position = _CYCLE
    LfsrRng(int(seed))
    idx = (position[int(seed)] + np.arange(count, dtype=np.int64)) % LFSR_PERIOD
    return order[idx]


@dataclass(frozen=True)
class Probability:
    value: float

    def __post_init__(self):
        if not (0.0 <= self.value <= 1.0):
            raise ValueError(f"probability {self.value!r} outside [0, 1]")

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class EncoderRange:
    """Linear map of ``[lo, hi]`` onto ``[0, 1]``; values outside saturate."""

    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not self.lo < self.hi:
            raise ConfigurationError(f"encoder range needs lo < hi, got [{self.lo}, {self.hi}]")

    def norm(self, x):
        out = (np.asarray(x, dtype=np.float64) - self.lo) / (self.hi - self.lo)
        out = np.clip(out, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def threshold(self, x):
        """Integer compare threshold ``round(norm(x) * 2^16)``, halves rounded up."""
        t = np.floor(np.asarray(self.norm(x)) * WORD_SPAN + 0.5).astype(np.int64)
        return int(t) if t.ndim == 0 else t


@dataclass(frozen=True)
class LfsrRng:
    state: int = 0xACE1

    def __post_init__(self):
        if not isinstance(self.state, (int, np.integer)) or not 0 < self.state < WORD_SPAN:
            raise ConfigurationError(
                f"LFSR state must be a non-zero 16-bit integer, got {self.state!r}"
            )


def lfsr_next(rng: LfsrRng) -> tuple[LfsrRng, int]:
    """Advance ``rng`` by one draw; return the new rng and the pre-advance word."""
    word = int(rng.state)
    return LfsrRng(_advance_word(word)), word


def mix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(global_seed: int, module_id: int, row: int, col: int) -> int:
    """Non-zero 16-bit LFSR seed for one encoder instance."""
    h = mix64(global_seed & _MASK64)
    for v in (module_id, row, col):
        h = mix64(h ^ (v & _MASK64))
    return h % LFSR_PERIOD + 1


def derive_seeds(global_seed: int, module_id: int, shape) -> np.ndarray:
    if isinstance(shape, int):
        shape = (shape,)
    rows, cols = (shape[0], 1) if len(shape) == 1 else shape
    out = np.empty((rows, cols), dtype=np.uint32)
    for r in range(rows):
        for c in range(cols):
            out[r, c] = derive_seed(global_seed, module_id, r, c)
    return out.reshape(shape)


def bernoulli_encode(x: float, rng_range: EncoderRange, rng: LfsrRng) -> tuple[LfsrRng, int]:
    """Emit one Bernoulli(norm(x)) bit using exactly one draw."""
    rng, word = lfsr_next(rng)
    return rng, int(word < rng_range.threshold(x))


def sc_and(a: int, b: int) -> int:
    if a not in (0, 1) or b not in (0, 1):
        raise ValueError(f"sc_and expects bits, got {a!r}, {b!r}")
    return a & b


def _check_denom(denom):
    if not is_power_of_two(denom) or not 2 <= denom <= WORD_SPAN:
        raise ConfigurationError(
            f"denominator {denom!r} must be a power-of-two in [2, {WORD_SPAN}]"
        )


def bernoulli_from_count(count: int, denom: int, rng: LfsrRng) -> tuple[LfsrRng, int]:
    """Emit Bernoulli(count/denom) via ``(word mod denom) < count``.

    Normalisation by a power-of-two denominator reduces to masking the
    low bits of the random word, so no divider is needed.
    """
    _check_denom(denom)
    if count < 0 or count > denom:
        raise CounterOverflowError(f"count {count} outside [0, {denom}]")
    rng, word = lfsr_next(rng)
    return rng, int((word & (denom - 1)) < count)


def bernoulli_from_ratio(count: int, denom: int, rng: LfsrRng) -> tuple[LfsrRng, int]:
    """General-denominator encoder: ``word < round(count * 2^16 / denom)``.

    Used only when a dimension is not a power of two; carries no
    bit-exactness guarantee against other implementations.
    """
    if denom <= 0:
        raise ConfigurationError(f"denominator must be positive, got {denom}")
    if count < 0 or count > denom:
        raise CounterOverflowError(f"count {count} outside [0, {denom}]")
    rng, word = lfsr_next(rng)
    return rng, int(word < (count * WORD_SPAN + denom // 2) // denom)


# -- vectorised forms ------------------------------------------------------

def encode_words(values, rng_range: EncoderRange, words) -> np.ndarray:
    return (np.asarray(words) < rng_range.threshold(values)).astype(np.uint8)


def count_bits_from_words(counts, denom: int, words, *, exact=True) -> np.ndarray:
    """Array form of :func:`bernoulli_from_count` (or the ratio form if not ``exact``)."""
    counts = np.asarray(counts, dtype=np.int64)
    if counts.size and (counts.min() < 0 or counts.max() > denom):
        raise CounterOverflowError(f"count outside [0, {denom}]")
    words = np.asarray(words, dtype=np.int64)
    if exact:
        _check_denom(denom)
        return ((words & (denom - 1)) < counts).astype(np.uint8)
    return (words < (counts * WORD_SPAN + denom // 2) // denom).astype(np.uint8)


class LfsrBank:
    """An array of independent LFSRs advanced together.

    ``draw()`` returns one word per LFSR; ``draw_n(k)`` returns ``k``
    consecutive words per LFSR along a new trailing axis.
    """

    def __init__(self, seeds):
        seeds = np.asarray(seeds, dtype=np.int64)
        if seeds.size and (seeds.min() <= 0 or seeds.max() >= WORD_SPAN):
            raise ConfigurationError("LFSR seeds must be non-zero 16-bit integers")
        self.states = seeds.astype(np.uint32)
        self.draws = 0

    @property
    def shape(self):
        return self.states.shape

    def draw(self) -> np.ndarray:
        words = self.states.copy()
        self.states = STEP_TABLE[self.states]
        self.draws += self.states.size
        return words

    def draw_n(self, k: int) -> np.ndarray:
        out = np.empty(self.states.shape + (k,), dtype=np.uint32)
        for n in range(k):
            out[..., n] = self.draw()
        return out

    def copy(self) -> "LfsrBank":
        other = LfsrBank.__new__(LfsrBank)
        other.states = self.states.copy()
        other.draws = self.draws
        return other


class EncoderRngBank:
    """Random words for the S-encoders and Attn-encoders of one SSA block.

    ``sharing="none"`` (default) gives every encoder its own LFSR: N*N for
    the score encoders (module MODULE_SCORE, index (i, j)) and N for the
    row output encoders (MODULE_ATTN, index (i, 0)).

    ``sharing="row"`` gives each row one LFSR (MODULE_ROW, index (i, 0))
    shared by its N score encoders, drawn in j order, and its output
    encoder.
    """

    def __init__(self, n: int, global_seed: int, sharing: str = "none"):
        if sharing not in ("none", "row"):
            raise ConfigurationError(f"unknown rng sharing mode {sharing!r}")
        self.n = n
        self.sharing = sharing
        if sharing == "none":
            self.score = LfsrBank(derive_seeds(global_seed, MODULE_SCORE, (n, n)))
            self.attn = LfsrBank(derive_seeds(global_seed, MODULE_ATTN, n))
        else:
            self.row = LfsrBank(derive_seeds(global_seed, MODULE_ROW, n))

    def score_words(self) -> np.ndarray:
        """One word per score encoder, shape (N, N)."""
        if self.sharing == "none":
            return self.score.draw()
        return self.row.draw_n(self.n)

    def attn_words(self) -> np.ndarray:
        """One word per row output encoder, shape (N,)."""
        if self.sharing == "none":
            return self.attn.draw()
        return self.row.draw()

    @property
    def draws(self) -> int:
        if self.sharing == "none":
            return self.score.draws + self.attn.draws
        return self.row.draws
