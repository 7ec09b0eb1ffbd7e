"""Discrete-time leaky integrate-and-fire layer that turns spike-coded
tokens into spiking query, key and value matrices.

Dynamics per neuron and time step::

    v[t] = beta * v[t-1] + I[t]
    spike[t] = v[t] >= v_threshold
    reset: v[t] = 0 (``"zero"``) or v[t] - v_threshold (``"subtract"``)

All spike matrices are token-major, shape (N, D_K).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_real_matrix, check_spike_matrix
from .exceptions import ConfigurationError, DimensionError


@dataclass(frozen=True)
class LifConfig:
    beta: float = 0.9
    v_threshold: float = 1.0
    reset: str = "zero"

    def __post_init__(self):
        if not 0.0 <= self.beta < 1.0:
            raise ConfigurationError(f"beta={self.beta} must lie in [0, 1)")
        if not self.v_threshold > 0.0:
            raise ConfigurationError(f"v_threshold={self.v_threshold} must be > 0")
        if self.reset not in ("zero", "subtract"):
            raise ConfigurationError(f"reset must be 'zero' or 'subtract', got {self.reset!r}")


@dataclass
class LifLayer:
    config: LifConfig
    shape: tuple
    membrane: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.shape = tuple(int(s) for s in self.shape)
        if self.membrane is None:
            self.membrane = np.zeros(self.shape)
        else:
            self.membrane = check_real_matrix(self.membrane, "membrane", shape=self.shape).copy()

    def step(self, current) -> np.ndarray:
        current = np.asarray(current, dtype=np.float64)
        if current.shape != self.shape:
            raise DimensionError(f"input current has shape {current.shape}, layer is {self.shape}")
        cfg = self.config
        v = cfg.beta * self.membrane + current
        spikes = v >= cfg.v_threshold
        if cfg.reset == "zero":
            v = np.where(spikes, 0.0, v)
        else:
            v = np.where(spikes, v - cfg.v_threshold, v)
        self.membrane = v
        return spikes.astype(np.uint8)

    def reset_state(self):
        self.membrane = np.zeros(self.shape)


def lif_step(layer: LifLayer, current) -> tuple[LifLayer, np.ndarray]:
    """Advance ``layer`` one time step in place; returns ``(layer, spikes)``."""
    return layer, layer.step(current)


@dataclass(frozen=True)
class QkvWeights:
    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray

    def __post_init__(self):
        w_q = check_real_matrix(self.w_q, "w_q")
        object.__setattr__(self, "w_q", w_q)
        object.__setattr__(self, "w_k", check_real_matrix(self.w_k, "w_k", shape=w_q.shape))
        object.__setattr__(self, "w_v", check_real_matrix(self.w_v, "w_v", shape=w_q.shape))

    @property
    def shape(self):
        return self.w_q.shape

    @classmethod
    def random(cls, d, d_k, *, scale=1.0, random_state=None):
        rs = np.random.default_rng(random_state)
        return cls(*(rs.uniform(0.0, scale, size=(d, d_k)) for _ in range(3)))


def spike_matmul(x_t, w) -> np.ndarray:
    """Binary-by-real product computed with accumulations only.

    Row ``n`` of the result is the sum of the weight rows selected by
    the spikes in ``x_t[n]``.
    """
    x_t = check_spike_matrix(x_t, "x_t")
    w = np.asarray(w, dtype=np.float64)
    if x_t.shape[1] != w.shape[0]:
        raise DimensionError(f"cannot multiply {x_t.shape} spikes by {w.shape} weights")
    out = np.zeros((x_t.shape[0], w.shape[1]))
    for n, row in enumerate(x_t):
        for d in np.flatnonzero(row):
            out[n] += w[d]
    return out


def make_qkv_layers(n, d_k, config: LifConfig | None = None):
    config = config or LifConfig()
    return tuple(LifLayer(config, (n, d_k)) for _ in range(3))


def encode_qkv(x_t, weights: QkvWeights, layers):
    """One time step of spiking Q/K/V generation.

    ``layers`` is a ``(q_layer, k_layer, v_layer)`` triple whose membranes
    are updated in place.
    """
    x_t = check_spike_matrix(x_t, "x_t")
    if x_t.shape[1] != weights.shape[0]:
        raise DimensionError(f"x_t has {x_t.shape[1]} features, weights expect {weights.shape[0]}")
    out = []
    for w, layer in zip((weights.w_q, weights.w_k, weights.w_v), layers):
        out.append(layer.step(spike_matmul(x_t, w)))
    return tuple(out)
