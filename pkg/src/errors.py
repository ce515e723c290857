"""Exception types raised across the package. The CLI maps them to exit codes."""


class SwarmFilterError(Exception):
    """Base class for all package errors."""


class DataError(SwarmFilterError, ValueError):
    """Bad input data: unparsable rows, time ties, region violations, size mismatches."""


class StateError(SwarmFilterError, ValueError):
    """A recursion was asked to do something its state contract forbids."""


class NumericalError(SwarmFilterError, ArithmeticError):
    """Non-finite objective, exhausted sampler, or failed optimisation."""


class OracleLimitError(DataError):
    """Catalog too large for exhaustive enumeration."""
