class RegunetError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(RegunetError, ValueError):
    pass


class NonFiniteError(RegunetError, FloatingPointError):
    pass


class CacheError(RegunetError, RuntimeError):
    """backward() called without a valid forward cache."""


class ConfigError(RegunetError, ValueError):
    pass


class DataError(RegunetError, ValueError):
    pass


class CheckpointError(RegunetError, ValueError):
    pass


class NumericalAbort(RegunetError, FloatingPointError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, message, epoch=None, batch=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch
