"""Exception hierarchy shared by the trellis builders and the codec."""


class ShapingError(Exception):
    """Base class for all errors raised by :mod:`bess`."""


class BPOverflowError(ShapingError, OverflowError):
    """A value needs a larger exponent than the configured precision allows."""


class InvertibilityError(ShapingError):
    """A trellis violates the successor-sum condition at ``node``."""

    def __init__(self, node, message=None):
        self.node = node
        super().__init__(message or f"successor-sum condition violated at (n, l) = {node}")


class OutOfBandError(ShapingError):
    """An amplitude sequence leaves the trellis at ``column``."""

    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"sequence leaves the trellis at column {column}")


class OutOfImageError(ShapingError):
    """A representable sequence that the encoder can never produce."""

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or "sequence is outside the encoder image")


class ConvergenceError(ShapingError):
    pass


class CapExceededError(ShapingError):
    """An exhaustive computation would exceed its configured size cap."""
