"""Cycle-accurate simulator of the N x N stochastic attention unit (SAU) array.

Each SAU (i, j) holds an 8-bit score counter, a held score bit ``s_reg``
and a D_K-deep V shift register.  Query bit ``q[i]`` is broadcast to
column i; key and value bits ``k[j]``, ``v[j]`` to row j of the array.

Timing (one call to :func:`block_cycle` is one clock):

* accumulate phase, D_K valid input cycles: ``counter += q[i] & k[j]``;
  ``v[j]`` is shifted into every SAU's FIFO.
* boundary, end of the D_K-th valid cycle: every counter is re-encoded
  into ``s_reg`` by its score encoder and cleared.
* weighted-sum phase, the next D_K cycles: every SAU emits
  ``s_reg & fifo_head``; row adder i sums its N outputs and the row's
  output encoder emits ``Attn[i, d]`` for ``d = 0 .. D_K-1``.

Within a cycle the weighted-sum output is produced from the current
``s_reg`` before the boundary may overwrite it, which lets step t+1
accumulate while step t drains (pipelined mode).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_spike_matrix
from .exceptions import CounterOverflowError, DimensionError, FifoUnderflowError, SsaError
from .sc_core import EncoderRngBank, count_bits_from_words

COUNTER_BITS = 8


@dataclass
class PortBits:
    """Inputs driven onto the array for one clock."""

    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    valid: bool = True

    @classmethod
    def idle(cls, n):
        z = np.zeros(n, dtype=np.uint8)
        return cls(z, z, z, valid=False)


def stream_schedule(q_t, k_t, v_t) -> list[PortBits]:
    """Per-cycle port assignment for one time step.

    At cycle c column i receives ``q_t[i, c]`` and row j receives
    ``k_t[j, c]`` and ``v_t[j, c]``.
    """
    q_t = check_spike_matrix(q_t, "q_t")
    k_t = check_spike_matrix(k_t, "k_t", shape=q_t.shape)
    v_t = check_spike_matrix(v_t, "v_t", shape=q_t.shape)
    return [PortBits(q_t[:, c].copy(), k_t[:, c].copy(), v_t[:, c].copy())
            for c in range(q_t.shape[1])]


@dataclass(frozen=True)
class SauState:
    """Read-only view of one SAU's registers."""

    counter: int
    s_reg: int
    v_fifo: tuple
    phase: str


class SsaBlockState:
    """Register state of the whole array plus its encoders."""

    def __init__(self, n, d_k, rngs: EncoderRngBank, *, exact=True):
        if rngs.n != n:
            raise DimensionError(f"rng bank is for N={rngs.n}, block has N={n}")
        if d_k > 1 << COUNTER_BITS:
            raise CounterOverflowError(f"D_K={d_k} exceeds the {COUNTER_BITS}-bit counter range")
        self.n = n
        self.d_k = d_k
        self.rngs = rngs
        self.exact = exact
        self.counter = np.zeros((n, n), dtype=np.int32)
        self.s_reg = np.zeros((n, n), dtype=np.uint8)
        self.v_fifo = np.zeros((n, n, d_k), dtype=np.uint8)
        self.fifo_valid = np.zeros((n, n, d_k), dtype=bool)
        self.fifo_head = 0  # ring-buffer index of the oldest entry
        self.acc_cycles = 0
        self.ws_index = -1
        self.steps_encoded = 0
        self.steps_emitted = 0
        self.cycle = 0

    @classmethod
    def from_seed(cls, n, d_k, global_seed, *, sharing="none", exact=True):
        return cls(n, d_k, EncoderRngBank(n, global_seed, sharing), exact=exact)

    @property
    def num_saus(self):
        return self.counter.size

    @property
    def phase(self):
        return "weighted-sum" if self.ws_index >= 0 else "accumulate"

    def sau(self, i, j) -> SauState:
        fifo = np.roll(self.v_fifo[i, j], -self.fifo_head)
        return SauState(int(self.counter[i, j]), int(self.s_reg[i, j]),
                        tuple(int(b) for b in fifo), self.phase)


@dataclass
class Emission:
    step: int
    d: int
    bits: np.ndarray  # one bit per row i


@dataclass
class CycleRecord:
    cycle: int
    valid: bool
    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    and_ops: int
    row_adds: int
    rng_draws: int
    max_counter: int
    emission: Emission | None = None
    counters: np.ndarray | None = None
    s_reg: np.ndarray | None = None

    def to_json(self) -> dict:
        rec = {
            "cycle": self.cycle,
            "valid": int(self.valid),
            "q": _hex(self.q), "k": _hex(self.k), "v": _hex(self.v),
            "and_ops": self.and_ops, "row_adds": self.row_adds,
            "rng_draws": self.rng_draws, "max_counter": self.max_counter,
        }
        if self.emission is not None:
            e = self.emission
            rec["emit"] = {"step": e.step, "d": e.d, "bits": _hex(e.bits)}
        if self.counters is not None:
            rec["counters"] = self.counters.tolist()
            rec["s_reg"] = [_hex(row) for row in self.s_reg]
        return rec


def _hex(bits) -> str:
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes().hex()


def unhex(text: str, n: int) -> np.ndarray:
    raw = np.frombuffer(bytes.fromhex(text), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n]


@dataclass
class CycleTrace:
    n: int
    d_k: int
    full: bool = False
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def extend(self, other: "CycleTrace"):
        self.records.extend(other.records)

    @property
    def and_ops(self):
        return sum(r.and_ops for r in self.records)

    @property
    def row_adds(self):
        return sum(r.row_adds for r in self.records)

    @property
    def rng_draws(self):
        return sum(r.rng_draws for r in self.records)

    @property
    def max_counter(self):
        return max((r.max_counter for r in self.records), default=0)

    @property
    def emissions(self):
        return [r for r in self.records if r.emission is not None]

    def latency(self):
        """Cycles from the first valid input to the last emitted bit, inclusive."""
        first = next(r.cycle for r in self.records if r.valid)
        last = self.emissions[-1].cycle
        return last - first + 1

    def write_jsonl(self, fh):
        fh.write(json.dumps({"format": "ssa-cycle-trace", "version": 1,
                             "n": self.n, "d_k": self.d_k}) + "\n")
        for r in self.records:
            fh.write(json.dumps(r.to_json(), separators=(",", ":")) + "\n")


def block_cycle(state: SsaBlockState, ports: PortBits, *, record_full=False):
    """Advance the array by one clock.

    Returns ``(state, record)``; ``record.emission`` carries the N output
    bits produced this cycle, if any.  ``state`` is updated in place.
    """
    n, d_k = state.n, state.d_k
    and_ops = row_adds = 0
    draws_before = state.rngs.draws
    emission = None

    # weighted-sum output uses the held score bits and the FIFO head
    h = state.fifo_head
    head, head_valid = state.v_fifo[:, :, h], state.fifo_valid[:, :, h]
    if state.ws_index >= 0:
        if not head_valid.all():
            raise FifoUnderflowError(f"cycle {state.cycle}: V FIFO popped before valid data")
        sau_out = state.s_reg & head
        and_ops += n * n
        row_sum = sau_out.sum(axis=1, dtype=np.int64)
        row_adds += n
        bits = count_bits_from_words(row_sum, n, state.rngs.attn_words(), exact=state.exact)
        emission = Emission(state.steps_emitted, state.ws_index, bits)
        state.ws_index += 1
        if state.ws_index == d_k:
            state.ws_index = -1
            state.steps_emitted += 1

    # V shift register: pop head, push this cycle's value bit
    state.v_fifo[:, :, h] = np.asarray(ports.v, dtype=np.uint8)[None, :]
    state.fifo_valid[:, :, h] = bool(ports.valid)
    state.fifo_head = (h + 1) % d_k

    if ports.valid:
        q = np.asarray(ports.q, dtype=np.uint8)
        k = np.asarray(ports.k, dtype=np.uint8)
        state.counter += q[:, None] & k[None, :]
        and_ops += n * n
        if state.counter.max() > d_k:
            raise CounterOverflowError(f"cycle {state.cycle}: score counter exceeded D_K={d_k}")
        state.acc_cycles += 1

    max_counter = int(state.counter.max())
    if state.acc_cycles == d_k:
        if state.ws_index >= 0:
            raise SsaError(f"cycle {state.cycle}: score register overwritten while still held")
        state.s_reg = count_bits_from_words(state.counter, d_k, state.rngs.score_words(),
                                            exact=state.exact)
        state.counter[:] = 0
        state.acc_cycles = 0
        state.ws_index = 0
        state.steps_encoded += 1

    record = CycleRecord(
        cycle=state.cycle, valid=bool(ports.valid),
        q=np.array(ports.q, dtype=np.uint8), k=np.array(ports.k, dtype=np.uint8),
        v=np.array(ports.v, dtype=np.uint8),
        and_ops=and_ops, row_adds=row_adds, rng_draws=state.rngs.draws - draws_before,
        max_counter=max_counter, emission=emission,
    )
    if record_full:
        record.counters = state.counter.copy()
        record.s_reg = state.s_reg.copy()
    state.cycle += 1
    return state, record


def _drive(state, port_seq, trace, outputs):
    for ports in port_seq:
        state, rec = block_cycle(state, ports, record_full=trace.full)
        trace.records.append(rec)
        if rec.emission is not None:
            e = rec.emission
            while len(outputs) <= e.step:
                outputs.append(np.zeros((state.n, state.d_k), dtype=np.uint8))
            outputs[e.step][:, e.d] = e.bits
    return state


def _idle(n, count):
    return (PortBits.idle(n) for _ in range(count))


def run_timestep(state: SsaBlockState, q_t, k_t, v_t, *, full_trace=False):
    """One unpipelined time step: D_K accumulate cycles then D_K drain cycles."""
    _check_step_shape(state, q_t)
    trace = CycleTrace(state.n, state.d_k, full=full_trace)
    outputs = []
    start = state.steps_emitted
    state = _drive(state, stream_schedule(q_t, k_t, v_t), trace, outputs)
    state = _drive(state, _idle(state.n, state.d_k), trace, outputs)
    return state, outputs[start], trace


def run_stream(state: SsaBlockState, steps, *, pipelined=True, full_trace=False):
    """Run a sequence of ``(q_t, k_t, v_t)`` triples through the array.

    Pipelined mode streams the next step's inputs while the previous step
    drains, so T steps take D_K * (T + 1) cycles instead of 2 * D_K * T.
    Returns ``(outputs, trace)`` with one N x D_K output matrix per step.
    """
    trace = CycleTrace(state.n, state.d_k, full=full_trace)
    outputs = []
    first = state.steps_emitted
    if pipelined:
        def ports():
            for q_t, k_t, v_t in steps:
                _check_step_shape(state, q_t)
                yield from stream_schedule(q_t, k_t, v_t)
            yield from _idle(state.n, state.d_k)
        state = _drive(state, ports(), trace, outputs)
    else:
        for q_t, k_t, v_t in steps:
            state, _, step_trace = run_timestep(state, q_t, k_t, v_t, full_trace=full_trace)
            trace.extend(step_trace)
        outputs = _collect(trace, state)
        first = 0
    return outputs[first:], trace


def _collect(trace: CycleTrace, state):
    outputs = {}
    for rec in trace.emissions:
        e = rec.emission
        out = outputs.setdefault(e.step, np.zeros((state.n, state.d_k), dtype=np.uint8))
        out[:, e.d] = e.bits
    return [outputs[k] for k in sorted(outputs)]


def _check_step_shape(state, q_t):
    if np.shape(q_t) != (state.n, state.d_k):
        raise DimensionError(f"step inputs have shape {np.shape(q_t)}, array is {(state.n, state.d_k)}")
