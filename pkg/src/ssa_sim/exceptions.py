"""Exception hierarchy shared by every module of the package."""


class SsaError(Exception):
    """Base class for all errors raised by ssa_sim."""


class ConfigurationError(SsaError, ValueError):
    """Invalid configuration value (dimensions, seeds, encoder ranges)."""


class DimensionError(SsaError, ValueError):
    """Operand shapes do not agree."""


class NonBinaryError(SsaError, ValueError):
    """A spike matrix contained a value other than 0 or 1."""


class CounterOverflowError(SsaError, OverflowError):
    """A count exceeded the capacity of its counter or encoder denominator."""


class FifoUnderflowError(SsaError, RuntimeError):
    """A SAU popped its V shift register before a valid bit was pushed."""
