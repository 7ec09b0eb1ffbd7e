"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""
import numpy as np

from .exceptions import ConfigurationError, DimensionError, NonBinaryError


def is_power_of_two(n) -> bool:
    return isinstance(n, (int, np.integer)) and n > 0 and (n & (n - 1)) == 0


def check_power_of_two(n, name, *, lo=1, hi=None):
    if not is_power_of_two(n):
        raise ConfigurationError(f"{name}={n!r} must be a power-of-two integer")
    if n < lo or (hi is not None and n > hi):
        raise ConfigurationError(f"{name}={n} must lie in [{lo}, {hi}]")
    return int(n)


def check_positive_int(n, name, *, allow_zero=False):
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise ConfigurationError(f"{name}={n!r} must be an integer")
    if n < 0 or (n == 0 and not allow_zero):
        raise ConfigurationError(f"{name}={n} must be {'>= 0' if allow_zero else '> 0'}")
    return int(n)


def check_real_matrix(a, name="matrix", *, shape=None, unit_interval=False):
    """Return ``a`` as a finite 2-D float64 array.

    Parameters
    ----------
    shape : tuple of int, optional
        Required shape; ``None`` entries are wildcards.
    unit_interval : bool
        Additionally require every entry to lie in [0, 1].
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if 0 in arr.shape:
        raise DimensionError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    _check_shape(arr, shape, name)
    if unit_interval and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(f"{name} entries must lie in [0, 1]")
    return arr


def check_spike_matrix(a, name="spikes", *, shape=None):
    """Return ``a`` as a 2-D uint8 array of zeros and ones.

    Boolean and integer inputs are accepted; any other value raises
    :class:`NonBinaryError`.
    """
    arr = np.asarray(a)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.dtype != np.bool_:
        if not np.all((arr == 0) | (arr == 1)):
            raise NonBinaryError(f"{name} must be binary")
    _check_shape(arr, shape, name)
    return arr.astype(np.uint8, copy=False)


def _check_shape(arr, shape, name):
    if shape is None:
        return
    if len(shape) != arr.ndim or any(
        want is not None and want != got for want, got in zip(shape, arr.shape)
    ):
        raise DimensionError(f"{name} has shape {arr.shape}, expected {shape}")
