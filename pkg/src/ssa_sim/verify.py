"""Verification suite run by ``ssa-sim verify`` and the acceptance tests.

Every check returns a :class:`CheckResult` carrying the statistics it
was judged on.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .cost_model import count_ops_ssa
from .fileio import VerifyOptions
from .functional import SsaConfig, independent_qkv, ssa_run, ssa_run_independent, ssa_step, decode_output
from .lif import LifConfig, QkvWeights
from .oracle import exact_attn_params, exact_ssa_params, linear_ssa_expectation
from .sau_array import SsaBlockState, run_stream, run_timestep
from .sc_core import (
    LFSR_PERIOD, STEP_TABLE, EncoderRange, EncoderRngBank, count_bits_from_words,
    derive_seed, encode_words, lfsr_sequence,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    stats: dict = field(default_factory=dict)

    def line(self):
        detail = ", ".join(f"{k}={_fmt(v)}" for k, v in self.stats.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {detail}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def _random_spikes(rs, shape):
    return (rs.random(shape) < rs.random()).astype(np.uint8)


# -- stochastic computing ---------------------------------------------------

def check_lfsr_period() -> CheckResult:
    state, steps = 1, 0
    table = STEP_TABLE.tolist()
    while True:
        state = table[state]
        steps += 1
        if state == 1 or steps > LFSR_PERIOD:
            break
    return CheckResult("lfsr maximal period", steps == LFSR_PERIOD, {"period": steps})


def check_count_exactness(denoms=(2, 4, 16, 64, 256)) -> CheckResult:
    """Over one full period the re-encoder emits c*(2^16-1)/d +/- 1 ones."""
    words = lfsr_sequence(1, LFSR_PERIOD)
    worst = 0.0
    for d in denoms:
        for c in range(d + 1):
            ones = int(count_bits_from_words(np.full(words.shape, c), d, words).sum())
            worst = max(worst, abs(ones - c * LFSR_PERIOD / d))
    return CheckResult("count encoder exact over a period", worst <= 1.0, {"max_dev": worst})


def check_sc_product(t=1 << 16, seeds=10, levels=(0.0, 0.25, 0.5, 0.75, 1.0), base_seed=0) -> CheckResult:
    """AND of two independent Bernoulli streams has rate p1*p2 within 4 sigma."""
    unit = EncoderRange()
    worst_z, failures, cases = 0.0, 0, 0
    for seed in range(base_seed, base_seed + seeds):
        wa = lfsr_sequence(derive_seed(seed, 100, 0, 0), t)
        wb = lfsr_sequence(derive_seed(seed, 100, 0, 1), t)
        for p1, p2 in itertools.product(levels, repeat=2):
            p = p1 * p2
            rate = float((encode_words(p1, unit, wa) & encode_words(p2, unit, wb)).mean())
            tol = 4 * math.sqrt(p * (1 - p) / t)
            cases += 1
            if abs(rate - p) > tol:
                failures += 1
            if tol > 0:
                worst_z = max(worst_z, abs(rate - p) / (tol / 4))
    return CheckResult("sc AND multiplication", failures == 0,
                       {"cases": cases, "failures": failures, "max_z": worst_z})


# -- functional model --------------------------------------------------------

def check_exact_params(grid=(2, 4, 8, 16), instances=100, seed=0) -> CheckResult:
    rs = np.random.default_rng(seed)
    mismatches = total = 0
    for n, d_k in itertools.product(grid, repeat=2):
        rngs = EncoderRngBank(n, seed)
        for _ in range(instances):
            q, k, v = (_random_spikes(rs, (n, d_k)) for _ in range(3))
            out = ssa_step(q, k, v, rngs)
            total += 1
            ok = (np.array_equal(out.s_params, exact_ssa_params(q, k))
                  and np.array_equal(out.attn_params, exact_attn_params(out.s, v))
                  and np.array_equal(out.s, count_bits_from_words(out.s_params * d_k, d_k, out.s_words))
                  and np.array_equal(out.attn, count_bits_from_words(out.attn_params * n, n, out.attn_words)))
            mismatches += not ok
    return CheckResult("exact parameter equivalence", mismatches == 0,
                       {"instances": total, "mismatches": mismatches})


def check_statistical(n=8, d_k=16, t=4096, seeds=30, tol=0.05, fraction=0.99, base_seed=0) -> CheckResult:
    """Time-averaged output converges to the linear-attention expectation."""
    within = total = 0
    worst = 0.0
    for seed in range(base_seed, base_seed + seeds):
        rs = np.random.default_rng(10_000 + seed)
        p_q, p_k, p_v = (rs.random((n, d_k)) for _ in range(3))
        cfg = SsaConfig(n=n, d=d_k, d_k=d_k, t=t, global_seed=seed)
        err = np.abs(decode_output(ssa_run_independent(p_q, p_k, p_v, cfg))
                     - linear_ssa_expectation(p_q, p_k, p_v))
        within += int((err <= tol).sum())
        total += err.size
        worst = max(worst, float(err.max()))
    frac = within / total
    return CheckResult("statistical convergence", frac >= fraction,
                       {"fraction_within": frac, "max_err": worst, "elements": total})


# -- cycle simulator -----------------------------------------------------------

def random_spike_stream(seed, n, d_k, t):
    """T independent Bernoulli (Q, K, V) triples with random per-element rates."""
    rs = np.random.default_rng(seed)
    cfg = SsaConfig(n=n, d=d_k, d_k=d_k, t=t, global_seed=seed)
    probs = [rs.random((n, d_k)) for _ in range(3)]
    return list(independent_qkv(*probs, cfg))


def check_simulator(grid=(2, 4, 8, 16), t=64, seeds=30, base_seed=0):
    """Bit-exactness against the functional model plus cycle contracts.

    Returns ``(bit_exact, cycle_contracts)`` results.
    """
    mismatched = cells = 0
    contract_failures = []
    max_counter_ok = True
    for n, d_k in itertools.product(grid, repeat=2):
        for seed in range(base_seed, base_seed + seeds):
            cells += 1
            steps = random_spike_stream(seed, n, d_k, t)
            rngs = EncoderRngBank(n, seed)
            ref = [ssa_step(q, k, v, rngs).attn for q, k, v in steps]

            piped, ptrace = run_stream(SsaBlockState.from_seed(n, d_k, seed), steps, pipelined=True)
            if not all(np.array_equal(a, b) for a, b in zip(ref, piped)) or len(piped) != t:
                mismatched += 1

            state = SsaBlockState.from_seed(n, d_k, seed)
            unpiped, total_cycles, latencies = [], 0, set()
            for q, k, v in steps:
                state, attn, tr = run_timestep(state, q, k, v)
                unpiped.append(attn)
                total_cycles += len(tr)
                latencies.add(tr.latency())
            if latencies != {2 * d_k} or total_cycles != 2 * d_k * t:
                contract_failures.append((n, d_k, seed, "unpipelined"))
            if len(ptrace) != d_k * (t + 1):
                contract_failures.append((n, d_k, seed, "pipelined"))
            if not all(np.array_equal(a, b) for a, b in zip(piped, unpiped)):
                contract_failures.append((n, d_k, seed, "pipelined != unpipelined"))
            max_counter_ok &= ptrace.max_counter <= d_k
    exact = CheckResult("functional vs cycle-accurate bit-exactness", mismatched == 0,
                        {"cells": cells, "mismatched": mismatched})
    contracts = CheckResult("cycle contracts", not contract_failures and max_counter_ok,
                            {"cells": cells, "failures": len(contract_failures),
                             "counter_bound_ok": max_counter_ok})
    return exact, contracts


def check_count_trace(cells=10, grid=(2, 4, 8, 16), max_t=8, seed=0) -> CheckResult:
    rs = np.random.default_rng(seed)
    bad = []
    for c in range(cells):
        n, d_k = int(rs.choice(grid)), int(rs.choice(grid))
        t = int(rs.integers(1, max_t + 1))
        steps = random_spike_stream(seed * 1000 + c, n, d_k, t)
        _, trace = run_stream(SsaBlockState.from_seed(n, d_k, c), steps, pipelined=bool(c % 2))
        counts = count_ops_ssa(n, d_k, t)
        if (trace.and_ops, trace.rng_draws) != (counts.and_ops, counts.rng_draws):
            bad.append((n, d_k, t))
        elif trace.and_ops // 2 + trace.row_adds != counts.add_ops:
            bad.append((n, d_k, t))
    return CheckResult("count/trace agreement", not bad, {"cells": cells, "mismatched": len(bad)})


def check_lif_pipeline(n=4, d=8, d_k=8, t=32, seed=0) -> CheckResult:
    """The LIF-driven pipeline and the cycle simulator agree, and replay is deterministic."""
    rs = np.random.default_rng(seed)
    x = rs.random((n, d))
    weights = QkvWeights.random(d, d_k, scale=0.5, random_state=seed)
    cfg = SsaConfig(n=n, d=d, d_k=d_k, t=t, global_seed=seed)
    run_a = ssa_run(x, weights, LifConfig(), cfg)
    run_b = ssa_run(x, weights, LifConfig(), cfg)
    replay = all(np.array_equal(a.attn, b.attn) and np.array_equal(a.s, b.s) for a, b in zip(run_a, run_b))
    sim, _ = run_stream(SsaBlockState.from_seed(n, d_k, seed), [o.qkv for o in run_a])
    same = all(np.array_equal(o.attn, s) for o, s in zip(run_a, sim))
    return CheckResult("LIF pipeline replay and simulator agreement", replay and same,
                       {"replay": replay, "simulator_match": same})


def run_all(opts: VerifyOptions | None = None, base_seed=0):
    """Run every check with the sizes in ``opts``; yields results as they finish."""
    opts = opts or VerifyOptions()
    grid = tuple(opts.grid)
    yield check_lfsr_period()
    yield check_count_exactness()
    yield check_sc_product(t=opts.sc_t, seeds=opts.sc_seeds, base_seed=base_seed)
    yield check_exact_params(grid=grid, instances=opts.exact_instances, seed=base_seed)
    yield from check_simulator(grid=grid, t=opts.bitexact_t, seeds=opts.seeds, base_seed=base_seed)
    yield check_statistical(n=opts.stat_n, d_k=opts.stat_d_k, t=opts.stat_t, seeds=opts.seeds,
                            tol=opts.stat_tol, fraction=opts.stat_fraction, base_seed=base_seed)
    yield check_count_trace(cells=opts.count_cells, grid=grid, seed=base_seed)
    yield check_lif_pipeline(seed=base_seed)
