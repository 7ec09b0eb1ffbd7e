import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ssa_sim.exceptions import ConfigurationError, DimensionError
from ssa_sim.lif import LifConfig, LifLayer, QkvWeights, encode_qkv, lif_step, make_qkv_layers, spike_matmul


def _scalar_lif(currents, beta, thr, reset="zero"):
    v, out = 0.0, []
    for i in currents:
        v = beta * v + i
        if v >= thr:
            out.append(1)
            v = 0.0 if reset == "zero" else v - thr
        else:
            out.append(0)
    return out


def test_config_validation():
    with pytest.raises(ConfigurationError):
        LifConfig(beta=1.0)
    with pytest.raises(ConfigurationError):
        LifConfig(v_threshold=0.0)
    with pytest.raises(ConfigurationError):
        LifConfig(reset="hold")


def test_zero_current_never_spikes():
    layer = LifLayer(LifConfig(), (3, 4))
    for _ in range(20):
        layer, spikes = lif_step(layer, np.zeros((3, 4)))
        assert not spikes.any()
    assert not layer.membrane.any()


def test_threshold_equality_fires_and_resets():
    layer = LifLayer(LifConfig(v_threshold=1.0), (1, 1))
    layer, spikes = lif_step(layer, np.ones((1, 1)))
    assert spikes[0, 0] == 1
    assert layer.membrane[0, 0] == 0.0


def test_first_spike_time_constant_current():
    # 0.4, 0.76, 1.084 -> fires at the third step
    spikes = _scalar_lif([0.4] * 10, 0.9, 1.0)
    assert spikes.index(1) + 1 == 3
    layer = LifLayer(LifConfig(beta=0.9, v_threshold=1.0), (1, 1))
    got = [layer.step(np.full((1, 1), 0.4))[0, 0] for _ in range(10)]
    assert got == spikes


@pytest.mark.parametrize("reset", ["zero", "subtract"])
def test_layer_matches_scalar_oracle(reset):
    rs = np.random.default_rng(1)
    currents = rs.uniform(-0.2, 0.8, size=(30, 2, 3))
    layer = LifLayer(LifConfig(beta=0.8, v_threshold=1.0, reset=reset), (2, 3))
    got = np.array([layer.step(c) for c in currents])
    for i in range(2):
        for j in range(3):
            assert got[:, i, j].tolist() == _scalar_lif(currents[:, i, j], 0.8, 1.0, reset)


def test_shape_mismatch():
    layer = LifLayer(LifConfig(), (2, 2))
    with pytest.raises(DimensionError):
        layer.step(np.zeros((2, 3)))


def test_membrane_bounded_after_reset_to_zero():
    rs = np.random.default_rng(2)
    layer = LifLayer(LifConfig(beta=0.95, v_threshold=0.7), (4, 4))
    for _ in range(50):
        layer.step(rs.uniform(0, 1.5, (4, 4)))
        assert (layer.membrane < 0.7).all()


def test_beta_zero_tiny_threshold_is_sign_threshold():
    rs = np.random.default_rng(3)
    layer = LifLayer(LifConfig(beta=0.0, v_threshold=1e-12), (5, 5))
    for _ in range(10):
        current = rs.normal(size=(5, 5))
        assert np.array_equal(layer.step(current), (current > 0).astype(np.uint8))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(1, 8), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_spike_matmul_accumulate_equals_mac(n, d, d_k, seed):
    rs = np.random.default_rng(seed)
    x = rs.integers(0, 2, (n, d)).astype(np.uint8)
    # dyadic weights make both summation orders exact
    w = rs.integers(-512, 512, (d, d_k)) / 256.0
    assert np.array_equal(spike_matmul(x, w), x.astype(float) @ w)


def test_spike_matmul_shape_error():
    with pytest.raises(DimensionError):
        spike_matmul(np.ones((2, 3), dtype=np.uint8), np.ones((4, 2)))


def test_encode_qkv_zero_input():
    weights = QkvWeights.random(4, 4, random_state=0)
    layers = make_qkv_layers(2, 4)
    for s in encode_qkv(np.zeros((2, 4), dtype=np.uint8), weights, layers):
        assert not s.any()


def test_encode_qkv_identity_weights():
    x = np.array([[1, 0, 1, 0], [0, 1, 1, 1]], dtype=np.uint8)
    eye = np.eye(4)
    q, k, v = encode_qkv(x, QkvWeights(eye, eye, eye), make_qkv_layers(2, 4, LifConfig(v_threshold=1.0)))
    assert np.array_equal(q, x) and np.array_equal(k, x) and np.array_equal(v, x)


def test_encode_qkv_matches_brute_force():
    rs = np.random.default_rng(4)
    n, d, d_k = 3, 5, 4
    weights = QkvWeights.random(d, d_k, scale=0.7, random_state=4)
    layers = make_qkv_layers(n, d_k, LifConfig(beta=0.9, v_threshold=1.0))
    xs = rs.integers(0, 2, (3, n, d)).astype(np.uint8)
    got = [encode_qkv(x, weights, layers) for x in xs]
    for m, w in enumerate((weights.w_q, weights.w_k, weights.w_v)):
        for i in range(n):
            for j in range(d_k):
                currents = [sum(w[dd, j] for dd in range(d) if x[i, dd]) for x in xs]
                assert [g[m][i, j] for g in got] == _scalar_lif(currents, 0.9, 1.0)


def test_encode_qkv_dimension_error():
    with pytest.raises(DimensionError):
        encode_qkv(np.zeros((2, 3), dtype=np.uint8), QkvWeights.random(4, 4), make_qkv_layers(2, 4))


def test_qkv_weights_shape_check():
    with pytest.raises(DimensionError):
        QkvWeights(np.ones((2, 2)), np.ones((2, 3)), np.ones((2, 2)))
