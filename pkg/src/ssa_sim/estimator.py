"""scikit-learn style wrapper around the stochastic spiking attention block."""
import numbers

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted

from .functional import SsaConfig, decode_output, ssa_run
from .lif import LifConfig, QkvWeights
from .sau_array import SsaBlockState, run_stream
from .sc_core import EncoderRange


class StochasticSpikingAttention(TransformerMixin, BaseEstimator):
    """Spiking self-attention over one token sequence.

    ``fit`` draws the query/key/value projection weights (much like a
    random projection); ``transform`` treats the rows of ``X`` as tokens,
    runs the Bernoulli encoder, LIF layer and stochastic attention block
    for ``n_steps`` time steps and returns the rate-decoded output.

    Parameters
    ----------
    d_k : int, default=16
        Key dimension, a power of two no larger than 256.
    n_steps : int, default=64
        Time steps T.
    beta, v_threshold, reset
        LIF neuron constants, see :class:`~ssa_sim.lif.LifConfig`.
    input_range : tuple of float, default=(0.0, 1.0)
        Range mapped onto spike probability [0, 1].
    weight_scale : float, default=0.25
        Weights are drawn from U(0, weight_scale).
    backend : {"functional", "cycle"}, default="functional"
        ``"cycle"`` runs the cycle-accurate array; output is identical.
    pipelined : bool, default=True
        Only used by the cycle backend.
    random_state : int, RandomState instance or None, default=0
        Seeds both the weights and the hardware PRNGs.

    Attributes
    ----------
    weights_ : QkvWeights
    n_features_in_ : int
    """

    def __init__(self, d_k=16, n_steps=64, beta=0.9, v_threshold=1.0, reset="zero",
                 input_range=(0.0, 1.0), weight_scale=0.25, backend="functional",
                 pipelined=True, random_state=0):
        self.d_k = d_k
        self.n_steps = n_steps
        self.beta = beta
        self.v_threshold = v_threshold
        self.reset = reset
        self.input_range = input_range
        self.weight_scale = weight_scale
        self.backend = backend
        self.pipelined = pipelined
        self.random_state = random_state

    def _global_seed(self):
        if isinstance(self.random_state, numbers.Integral):
            return int(self.random_state)
        return int(check_random_state(self.random_state).randint(0, 2**31 - 1))

    def fit(self, X, y=None):
        X = check_array(X)
        if self.backend not in ("functional", "cycle"):
            raise ValueError(f"backend must be 'functional' or 'cycle', got {self.backend!r}")
        self.n_features_in_ = X.shape[1]
        rs = check_random_state(self.random_state)
        self.weights_ = QkvWeights(*(rs.uniform(0.0, self.weight_scale, size=(X.shape[1], self.d_k))
                                     for _ in range(3)))
        self.seed_ = self._global_seed()
        return self

    def transform(self, X):
        check_is_fitted(self, "weights_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, fitted with {self.n_features_in_}")
        cfg = SsaConfig(n=X.shape[0], d=X.shape[1], d_k=self.d_k, t=self.n_steps,
                        global_seed=self.seed_, input_range=EncoderRange(*self.input_range))
        lif = LifConfig(self.beta, self.v_threshold, self.reset)
        outputs = ssa_run(X, self.weights_, lif, cfg)
        if self.backend == "cycle":
            sim, _ = run_stream(SsaBlockState.from_seed(cfg.n, cfg.d_k, cfg.global_seed),
                                [o.qkv for o in outputs], pipelined=self.pipelined)
            return np.mean(sim, axis=0)
        return decode_output(outputs)
