import numpy as np
import pytest

from ssa_sim.exceptions import ConfigurationError, CounterOverflowError, DimensionError
from ssa_sim.functional import (
    SsaConfig, decode_output, independent_qkv, ssa_run, ssa_run_independent, ssa_step,
)
from ssa_sim.lif import LifConfig, QkvWeights
from ssa_sim.oracle import exact_attn_params, exact_ssa_params, linear_ssa_expectation
from ssa_sim.sc_core import (
    MODULE_ATTN, MODULE_SCORE, EncoderRange, EncoderRngBank, LfsrRng, bernoulli_from_count,
    derive_seed,
)


def _bank(n=4, seed=0):
    return EncoderRngBank(n, seed)


def test_all_ones_and_all_zeros():
    ones = np.ones((4, 8), dtype=np.uint8)
    out = ssa_step(ones, ones, ones, _bank(4, 11))
    assert out.s.all() and out.attn.all()
    zeros = np.zeros((4, 8), dtype=np.uint8)
    out = ssa_step(zeros, zeros, zeros, _bank(4, 11))
    assert not out.s.any() and not out.attn.any()


def test_step_matches_scalar_replay():
    # recompute every bit with scalar per-encoder LFSRs in the canonical order
    rs = np.random.default_rng(5)
    n, d_k, g = 2, 4, 42
    bank = EncoderRngBank(n, g)
    score_rng = {(i, j): LfsrRng(derive_seed(g, MODULE_SCORE, i, j)) for i in range(n) for j in range(n)}
    attn_rng = {i: LfsrRng(derive_seed(g, MODULE_ATTN, i, 0)) for i in range(n)}
    for _ in range(20):
        q, k, v = (rs.integers(0, 2, (n, d_k)).astype(np.uint8) for _ in range(3))
        out = ssa_step(q, k, v, bank)
        s_p = exact_ssa_params(q, k)
        s = np.zeros((n, n), dtype=np.uint8)
        for i in range(n):
            for j in range(n):
                score_rng[i, j], s[i, j] = bernoulli_from_count(int(s_p[i, j] * d_k), d_k, score_rng[i, j])
        a_p = exact_attn_params(s, v)
        attn = np.zeros((n, d_k), dtype=np.uint8)
        for i in range(n):
            for d in range(d_k):
                attn_rng[i], attn[i, d] = bernoulli_from_count(int(a_p[i, d] * n), n, attn_rng[i])
        assert np.array_equal(out.s, s)
        assert np.array_equal(out.attn, attn)
        assert np.array_equal(out.s_params, s_p) and np.array_equal(out.attn_params, a_p)


def test_shape_and_bank_errors():
    ones = np.ones((4, 8), dtype=np.uint8)
    with pytest.raises(DimensionError):
        ssa_step(ones, ones[:, :4], ones, _bank(4))
    with pytest.raises(DimensionError):
        ssa_step(ones, ones, ones, _bank(2))


@pytest.mark.parametrize("kwargs,exc,msg", [
    (dict(d_k=3), ConfigurationError, "power-of-two"),
    (dict(n=6), ConfigurationError, "power-of-two"),
    (dict(d_k=512), CounterOverflowError, "counter"),
    (dict(t=-1), ConfigurationError, "T"),
    (dict(rng_sharing="all"), ConfigurationError, "rng_sharing"),
])
def test_config_validation(kwargs, exc, msg):
    with pytest.raises(exc, match=msg):
        SsaConfig(**kwargs)


def test_zero_input_gives_zero_attention():
    cfg = SsaConfig(n=4, d=8, d_k=8, t=16, input_range=EncoderRange(-1.0, 1.0))
    weights = QkvWeights.random(8, 8, random_state=0)
    outputs = ssa_run(np.full((4, 8), -1.0), weights, LifConfig(), cfg)
    assert len(outputs) == 16
    for o in outputs:
        assert not any(m.any() for m in o.qkv)
        assert not o.attn.any()


def test_zero_horizon():
    cfg = SsaConfig(n=4, d=8, d_k=8, t=0)
    assert ssa_run(np.zeros((4, 8)), QkvWeights.random(8, 8), LifConfig(), cfg) == []
    with pytest.raises(ValueError):
        decode_output([])


def test_run_replay_determinism_and_param_consistency():
    rs = np.random.default_rng(6)
    x = rs.random((4, 8))
    weights = QkvWeights.random(8, 8, scale=0.4, random_state=6)
    cfg = SsaConfig(n=4, d=8, d_k=8, t=40, global_seed=99)
    a = ssa_run(x, weights, LifConfig(), cfg)
    b = ssa_run(x, weights, LifConfig(), cfg)
    for oa, ob in zip(a, b):
        assert np.array_equal(oa.s, ob.s) and np.array_equal(oa.attn, ob.attn)
        q, k, v = oa.qkv
        assert np.array_equal(oa.s_params, exact_ssa_params(q, k))
        assert np.array_equal(oa.attn_params, exact_attn_params(oa.s, v))


def test_time_average_tracks_recorded_params():
    rs = np.random.default_rng(7)
    cfg = SsaConfig(n=4, d=8, d_k=8, t=1024, global_seed=7)
    outputs = ssa_run(rs.random((4, 8)), QkvWeights.random(8, 8, scale=0.3, random_state=7),
                      LifConfig(), cfg)
    avg_params = np.mean([o.attn_params for o in outputs], axis=0)
    assert np.abs(decode_output(outputs) - avg_params).max() <= 4 * np.sqrt(0.25 / cfg.t)


def test_decode_single_step_and_range():
    ones = np.ones((2, 2), dtype=np.uint8)
    out = ssa_step(ones, ones, ones, _bank(2))
    assert np.array_equal(decode_output([out]), out.attn)
    rs = np.random.default_rng(8)
    outs = ssa_run_independent(*(rs.random((4, 4)) for _ in range(3)), SsaConfig(n=4, d=4, d_k=4, t=32))
    dec = decode_output(outs)
    assert dec.min() >= 0 and dec.max() <= 1


def test_independent_mode_converges_to_linear_attention():
    rs = np.random.default_rng(9)
    p = [rs.random((8, 16)) for _ in range(3)]
    cfg = SsaConfig(n=8, d=16, d_k=16, t=4096, global_seed=9)
    err = np.abs(decode_output(ssa_run_independent(*p, cfg)) - linear_ssa_expectation(*p))
    assert err.max() <= 0.05


def test_independent_inputs_have_requested_rates():
    rs = np.random.default_rng(10)
    p = [rs.random((4, 8)) for _ in range(3)]
    cfg = SsaConfig(n=4, d=8, d_k=8, t=4096, global_seed=1)
    rates = np.mean([np.stack(t) for t in independent_qkv(*p, cfg)], axis=0)
    assert np.abs(rates - np.stack(p)).max() <= 5 * 0.5 / np.sqrt(4096)


def test_row_sharing_mode_converges():
    rs = np.random.default_rng(11)
    p = [rs.random((4, 8)) for _ in range(3)]
    cfg = SsaConfig(n=4, d=8, d_k=8, t=4096, global_seed=3, rng_sharing="row")
    err = np.abs(decode_output(ssa_run_independent(*p, cfg)) - linear_ssa_expectation(*p))
    assert err.max() <= 0.05


def test_general_n_mode():
    rs = np.random.default_rng(12)
    p = [rs.random((3, 6)) for _ in range(3)]
    cfg = SsaConfig(n=3, d=6, d_k=6, t=4096, global_seed=4, general_n=True)
    assert not cfg.exact
    err = np.abs(decode_output(ssa_run_independent(*p, cfg)) - linear_ssa_expectation(*p))
    assert err.max() <= 0.05
