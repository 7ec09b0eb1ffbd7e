"""Exact reference computations.

Floating-point attention for comparison, plus the exact Bernoulli
parameters of the stochastic attention block at one time step and its
expectation under independent Bernoulli inputs.
"""
import numpy as np

from ._validation import check_real_matrix, check_spike_matrix
from .exceptions import DimensionError


def softmax_attention(q, k, v, d_k=None):
    """Row-wise ``softmax(q k^T / sqrt(d_k)) v``."""
    q = check_real_matrix(q, "q")
    k = check_real_matrix(k, "k", shape=(None, q.shape[1]))
    v = check_real_matrix(v, "v", shape=(k.shape[0], None))
    d_k = q.shape[1] if d_k is None else d_k
    if d_k <= 0:
        raise DimensionError("d_k must be positive")
    logits = q @ k.T / np.sqrt(d_k)
    logits -= logits.max(axis=1, keepdims=True)
    w = np.exp(logits)
    w /= w.sum(axis=1, keepdims=True)
    assert np.allclose(w.sum(axis=1), 1.0)
    return w @ v


def linear_attention(q, k, v):
    """Softmax-free attention ``q k^T v / (N * D_K)`` on real inputs."""
    q = check_real_matrix(q, "q")
    k = check_real_matrix(k, "k", shape=q.shape)
    v = check_real_matrix(v, "v", shape=(q.shape[0], None))
    n, d_k = q.shape
    return q @ k.T @ v / (n * d_k)


def linear_ssa_expectation(p_q, p_k, p_v):
    """Expected per-step SSA output for independent Bernoulli Q, K, V streams."""
    p_q = check_real_matrix(p_q, "p_q", unit_interval=True)
    p_k = check_real_matrix(p_k, "p_k", shape=p_q.shape, unit_interval=True)
    p_v = check_real_matrix(p_v, "p_v", shape=p_q.shape, unit_interval=True)
    return linear_attention(p_q, p_k, p_v)


def score_counts(q_t, k_t):
    """Integer AND-counts ``sum_d q_t[i, d] & k_t[j, d]``, shape (N, N)."""
    q_t = check_spike_matrix(q_t, "q_t")
    k_t = check_spike_matrix(k_t, "k_t", shape=q_t.shape)
    return q_t.astype(np.int64) @ k_t.T.astype(np.int64)


def attn_counts(s_t, v_t):
    """Integer AND-counts ``sum_j s_t[i, j] & v_t[j, d]``, shape (N, D_K)."""
    s_t = check_spike_matrix(s_t, "s_t")
    v_t = check_spike_matrix(v_t, "v_t", shape=(s_t.shape[1], None))
    if s_t.shape[0] != s_t.shape[1]:
        raise DimensionError(f"s_t must be square, got {s_t.shape}")
    return s_t.astype(np.int64) @ v_t.astype(np.int64)


def exact_ssa_params(q_t, k_t):
    """Bernoulli parameter of every attention-score spike."""
    return score_counts(q_t, k_t) / q_t.shape[1]


def exact_attn_params(s_t, v_t):
    """Bernoulli parameter of every output spike given the sampled scores."""
    return attn_counts(s_t, v_t) / np.shape(s_t)[0]
