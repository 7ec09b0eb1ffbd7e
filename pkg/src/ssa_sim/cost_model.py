"""Operation and memory-access counting with configurable per-op energies.

Three attention blocks are modelled for the same (N, D_K):

* ``ann``        INT8 real-valued attention with softmax; 8-bit memory words.
* ``spikformer`` integer-multiplier spiking attention over T steps; binary
  operands so every multiply is an accumulate; 1-bit memory words.
* ``ssa``        the stochastic array; AND gates, counters, row adders and
  Bernoulli encoders, no intermediate memory traffic.

Memory is a single on-chip SRAM level with energy proportional to bits
accessed.  Energies are inputs; nothing here is calibrated.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields

from ._validation import check_positive_int
from .exceptions import ConfigurationError

PJ_PER_UJ = 1e6

COMPUTE_FIELDS = ("mac_ops", "ac_ops", "and_ops", "add_ops", "rng_draws", "compare_ops", "softmax_ops")
ENERGY_KEYS = (
    "mac_pj", "ac_pj", "and_pj", "add_pj", "rng_pj", "compare_pj", "softmax_pj",
    "mem_read_pj_per_bit", "mem_write_pj_per_bit",
)


@dataclass(frozen=True)
class OpCounts:
    mac_ops: int = 0
    ac_ops: int = 0
    and_ops: int = 0
    add_ops: int = 0
    rng_draws: int = 0
    compare_ops: int = 0
    softmax_ops: int = 0
    mem_reads: int = 0
    mem_writes: int = 0
    bits_per_access: int = 1

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be non-negative")

    def scaled(self, factor: int) -> "OpCounts":
        return dataclasses.replace(self, **{
            f.name: getattr(self, f.name) * factor
            for f in fields(self) if f.name != "bits_per_access"
        })

    @property
    def read_bits(self):
        return self.mem_reads * self.bits_per_access

    @property
    def write_bits(self):
        return self.mem_writes * self.bits_per_access

    def as_dict(self):
        return dataclasses.asdict(self)


def _dims(n, d_k, t=1):
    check_positive_int(n, "N")
    check_positive_int(d_k, "D_K")
    check_positive_int(t, "T", allow_zero=True)


def count_ops_ssa(n, d_k, t) -> OpCounts:
    """Counts for T time steps of the N x N stochastic attention array."""
    _dims(n, d_k, t)
    draws = n * n + n * d_k
    per_step = OpCounts(
        and_ops=2 * n * n * d_k,
        add_ops=n * n * d_k + n * d_k,
        rng_draws=draws,
        compare_ops=draws,
        mem_reads=3 * n * d_k,
        mem_writes=n * d_k,
        bits_per_access=1,
    )
    return per_step.scaled(t)


def count_ops_ann(n, d_k, *, softmax_weight=1) -> OpCounts:
    """Counts for one INT8 softmax attention evaluation.

    Scores are written to and read back from SRAM between the two matrix
    products.  ``softmax_weight`` is the number of exponential-equivalent
    ops charged per score; 0 leaves softmax out.
    """
    _dims(n, d_k)
    if softmax_weight < 0:
        raise ConfigurationError("softmax_weight must be non-negative")
    return OpCounts(
        mac_ops=2 * n * n * d_k,
        softmax_ops=softmax_weight * n * n,
        mem_reads=3 * n * d_k + n * n,
        mem_writes=n * n + n * d_k,
        bits_per_access=8,
    )


def count_ops_spikformer(n, d_k, t) -> OpCounts:
    """Counts for T steps of integer-multiplier spiking attention (no softmax)."""
    _dims(n, d_k, t)
    per_step = OpCounts(
        ac_ops=2 * n * n * d_k,
        mem_reads=3 * n * d_k + n * n,
        mem_writes=n * n + n * d_k,
        bits_per_access=1,
    )
    return per_step.scaled(t)


@dataclass(frozen=True)
class EnergyConfig:
    """Per-operation energies in pJ and per-bit SRAM energies in pJ/bit."""

    mac_pj: float
    ac_pj: float
    and_pj: float
    add_pj: float
    rng_pj: float
    compare_pj: float
    softmax_pj: float
    mem_read_pj_per_bit: float
    mem_write_pj_per_bit: float
    provenance: str

    def __post_init__(self):
        for key in ENERGY_KEYS:
            value = getattr(self, key)
            if value is None:
                raise ConfigurationError(f"missing energy constant {key!r}")
            if not value >= 0:
                raise ConfigurationError(f"energy constant {key}={value} must be >= 0")
        if not self.provenance or not self.provenance.strip():
            raise ConfigurationError("energy config needs a non-empty provenance")

    @classmethod
    def from_mapping(cls, mapping):
        missing = [k for k in ENERGY_KEYS + ("provenance",) if k not in mapping]
        if missing:
            raise ConfigurationError(f"missing energy constants: {', '.join(missing)}")
        kwargs = {k: float(mapping[k]) for k in ENERGY_KEYS}
        return cls(provenance=str(mapping["provenance"]), **kwargs)


_OP_ENERGY = {
    "mac_ops": "mac_pj", "ac_ops": "ac_pj", "and_ops": "and_pj", "add_ops": "add_pj",
    "rng_draws": "rng_pj", "compare_ops": "compare_pj", "softmax_ops": "softmax_pj",
}


@dataclass(frozen=True)
class EnergyReport:
    processing_uj: float
    memory_uj: float
    breakdown_uj: dict

    @property
    def total_uj(self):
        return self.processing_uj + self.memory_uj


def energy(counts: OpCounts, cfg: EnergyConfig) -> EnergyReport:
    breakdown = {
        op: getattr(counts, op) * getattr(cfg, key) / PJ_PER_UJ
        for op, key in _OP_ENERGY.items()
    }
    breakdown["mem_read"] = counts.read_bits * cfg.mem_read_pj_per_bit / PJ_PER_UJ
    breakdown["mem_write"] = counts.write_bits * cfg.mem_write_pj_per_bit / PJ_PER_UJ
    processing = sum(breakdown[op] for op in COMPUTE_FIELDS)
    memory = breakdown["mem_read"] + breakdown["mem_write"]
    return EnergyReport(processing, memory, breakdown)


def compare_architectures(n, d_k, t, cfg: EnergyConfig, *, softmax_weight=1):
    """Rows of the three-way comparison, keyed by architecture name."""
    counts = {
        "ann": count_ops_ann(n, d_k, softmax_weight=softmax_weight),
        "spikformer": count_ops_spikformer(n, d_k, t),
        "ssa": count_ops_ssa(n, d_k, t),
    }
    return {name: (c, energy(c, cfg)) for name, c in counts.items()}


# Reference anchors from the published comparison (single attention
# block, T = 10).  Absolute values depend on external 45 nm constants.
REFERENCE_TABLE_UJ = {
    "ann": (7.77, 89.96, 97.73),
    "spikformer": (6.20, 102.85, 109.05),
    "ssa": (1.23, 52.80, 54.03),
}
