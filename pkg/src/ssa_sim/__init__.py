"""Stochastic spiking attention: bit-exact functional model, cycle-accurate
SAU array simulator, exact oracles and an operation-count energy model."""

__version__ = "0.1.0"

from .cost_model import (
    EnergyConfig, EnergyReport, OpCounts, count_ops_ann, count_ops_spikformer,
    count_ops_ssa, energy,
)
from .estimator import StochasticSpikingAttention
from .exceptions import (
    ConfigurationError, CounterOverflowError, DimensionError, FifoUnderflowError,
    NonBinaryError, SsaError,
)
from .functional import (
    SsaConfig, SsaStepOutput, decode_output, ssa_run, ssa_run_independent, ssa_step,
)
from .lif import LifConfig, LifLayer, QkvWeights, encode_qkv, lif_step
from .oracle import (
    exact_attn_params, exact_ssa_params, linear_ssa_expectation, softmax_attention,
)
from .sau_array import (
    CycleTrace, SsaBlockState, block_cycle, run_stream, run_timestep, stream_schedule,
)
from .sc_core import (
    EncoderRange, EncoderRngBank, LfsrRng, Probability, bernoulli_encode,
    bernoulli_from_count, derive_seed, lfsr_next, sc_and,
)
