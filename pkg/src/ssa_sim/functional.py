"""Time-step-level model of the stochastic spiking attention block.

Per time step::

    S[i, j]    ~ Bern(count_ij / D_K),  count_ij = sum_d Q[i, d] & K[j, d]
    Attn[i, d] ~ Bern(count_id / N),    count_id = sum_j S[i, j] & V[j, d]

Random words are taken from an :class:`~ssa_sim.sc_core.EncoderRngBank`
in the canonical order: one word per score encoder (row-major), then
each row's output encoder draws D_K words in ``d`` order.  The cycle
simulator in :mod:`ssa_sim.sau_array` consumes the same words and must
reproduce these bits exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive_int, check_power_of_two, check_real_matrix, check_spike_matrix
from .exceptions import ConfigurationError, CounterOverflowError, DimensionError
from .lif import LifConfig, QkvWeights, encode_qkv, make_qkv_layers
from .oracle import attn_counts, score_counts
from .sc_core import (
    MODULE_INPUT, MODULE_K, MODULE_Q, MODULE_V, WORD_SPAN, EncoderRange,
    EncoderRngBank, LfsrBank, count_bits_from_words, derive_seeds, encode_words,
)

MAX_D_K = 256


@dataclass(frozen=True)
class SsaConfig:
    n: int = 8
    d: int = 16
    d_k: int = 16
    t: int = 64
    global_seed: int = 0
    input_range: EncoderRange = field(default_factory=EncoderRange)
    rng_sharing: str = "none"
    general_n: bool = False

    def __post_init__(self):
        check_positive_int(self.d, "D")
        check_positive_int(self.t, "T", allow_zero=True)
        if not 0 <= self.global_seed < 2**64:
            raise ConfigurationError(f"global_seed={self.global_seed} must be a 64-bit unsigned value")
        if self.rng_sharing not in ("none", "row"):
            raise ConfigurationError(f"rng_sharing must be 'none' or 'row', got {self.rng_sharing!r}")
        check_positive_int(self.n, "N")
        check_positive_int(self.d_k, "D_K")
        if self.d_k > MAX_D_K:
            raise CounterOverflowError(f"D_K={self.d_k} exceeds the 8-bit score counter")
        if not self.general_n:
            check_power_of_two(self.n, "N", lo=2, hi=WORD_SPAN)
            check_power_of_two(self.d_k, "D_K", lo=2, hi=MAX_D_K)

    @property
    def exact(self) -> bool:
        """True when both normalisations reduce to bit masks."""
        return not self.general_n or (
            self.n & (self.n - 1) == 0 and self.d_k & (self.d_k - 1) == 0
            and self.n >= 2 and self.d_k >= 2
        )


@dataclass
class SsaStepOutput:
    s: np.ndarray
    attn: np.ndarray
    s_params: np.ndarray
    attn_params: np.ndarray
    s_words: np.ndarray = field(repr=False, default=None)
    attn_words: np.ndarray = field(repr=False, default=None)
    qkv: tuple = field(repr=False, default=None)


def ssa_step(q_t, k_t, v_t, rngs: EncoderRngBank, *, exact=True) -> SsaStepOutput:
    """Sample one time step of attention scores and outputs.

    ``exact=False`` switches both encoders to the ratio-threshold form for
    non-power-of-two dimensions.
    """
    q_t = check_spike_matrix(q_t, "q_t")
    n, d_k = q_t.shape
    k_t = check_spike_matrix(k_t, "k_t", shape=(n, d_k))
    v_t = check_spike_matrix(v_t, "v_t", shape=(n, d_k))
    if rngs.n != n:
        raise DimensionError(f"rng bank is for N={rngs.n}, inputs have N={n}")
    if d_k > MAX_D_K:
        raise CounterOverflowError(f"D_K={d_k} exceeds the 8-bit score counter")

    s_cnt = score_counts(q_t, k_t)
    s_words = rngs.score_words()
    s = count_bits_from_words(s_cnt, d_k, s_words, exact=exact)

    a_cnt = attn_counts(s, v_t)
    attn_words = np.empty((n, d_k), dtype=np.uint32)
    for d in range(d_k):
        attn_words[:, d] = rngs.attn_words()
    attn = count_bits_from_words(a_cnt, n, attn_words, exact=exact)

    return SsaStepOutput(
        s=s, attn=attn, s_params=s_cnt / d_k, attn_params=a_cnt / n,
        s_words=s_words, attn_words=attn_words, qkv=(q_t, k_t, v_t),
    )


def _check_x(x, cfg: SsaConfig):
    return check_real_matrix(x, "x", shape=(cfg.n, cfg.d))


def ssa_run(x, weights: QkvWeights, lif_cfg: LifConfig, cfg: SsaConfig) -> list[SsaStepOutput]:
    """Full pipeline: Bernoulli-code ``x``, spiking Q/K/V, then SSA, for T steps.

    ``x`` is re-encoded with fresh draws at every step; LIF membranes
    persist across steps.
    """
    x = _check_x(x, cfg)
    if weights.shape != (cfg.d, cfg.d_k):
        raise DimensionError(f"weights are {weights.shape}, config needs {(cfg.d, cfg.d_k)}")
    thresholds = cfg.input_range.threshold(x)
    in_bank = LfsrBank(derive_seeds(cfg.global_seed, MODULE_INPUT, (cfg.n, cfg.d)))
    layers = make_qkv_layers(cfg.n, cfg.d_k, lif_cfg)
    rngs = EncoderRngBank(cfg.n, cfg.global_seed, cfg.rng_sharing)
    outputs = []
    for _ in range(cfg.t):
        x_t = (in_bank.draw() < thresholds).astype(np.uint8)
        q_t, k_t, v_t = encode_qkv(x_t, weights, layers)
        outputs.append(ssa_step(q_t, k_t, v_t, rngs, exact=cfg.exact))
    return outputs


def independent_qkv(p_q, p_k, p_v, cfg: SsaConfig):
    """Yield T independent Bernoulli (Q, K, V) spike triples from probability matrices.

    Bypasses the LIF layer so the inputs satisfy the independence that
    AND multiplication relies on.
    """
    shape = (cfg.n, cfg.d_k)
    probs = [check_real_matrix(p, name, shape=shape, unit_interval=True)
             for p, name in ((p_q, "p_q"), (p_k, "p_k"), (p_v, "p_v"))]
    unit = EncoderRange(0.0, 1.0)
    banks = [LfsrBank(derive_seeds(cfg.global_seed, m, shape)) for m in (MODULE_Q, MODULE_K, MODULE_V)]
    for _ in range(cfg.t):
        yield tuple(encode_words(p, unit, b.draw()) for p, b in zip(probs, banks))


def ssa_run_independent(p_q, p_k, p_v, cfg: SsaConfig) -> list[SsaStepOutput]:
    rngs = EncoderRngBank(cfg.n, cfg.global_seed, cfg.rng_sharing)
    return [ssa_step(q, k, v, rngs, exact=cfg.exact) for q, k, v in independent_qkv(p_q, p_k, p_v, cfg)]


def decode_output(outputs) -> np.ndarray:
    """Rate-decode the output spikes: elementwise mean over time steps."""
    outputs = list(outputs)
    if not outputs:
        raise ValueError("cannot decode an empty run")
    return np.mean([o.attn for o in outputs], axis=0)
