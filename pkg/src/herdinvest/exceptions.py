"""Exception types shared across the package."""


class HerdInvestError(Exception):
    """Base class for package errors."""


class ModelRangeError(HerdInvestError, ArithmeticError):
    """An exponent left the representable floating-point range."""


class ConvergenceError(HerdInvestError, RuntimeError):
    """An iterative routine exhausted its budget.

    The last iterate is kept on ``last`` so callers can inspect it.
    """

    def __init__(self, message, last=None, iterations=None):
        super().__init__(message)
        self.last = last
        self.iterations = iterations


class MarketAssumptionError(HerdInvestError, ValueError):
    """Market parameters violate sigma > 0 or mu > r."""


class ConfigError(HerdInvestError, ValueError):
    """Invalid configuration document; ``path`` names the offending key."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class DataFormatError(HerdInvestError, ValueError):
    """Unreadable price data; ``line`` is the 1-based line number when known."""

    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line
