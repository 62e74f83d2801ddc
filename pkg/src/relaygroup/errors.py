"""Exception types raised by the relaygroup package."""


class RelayError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RelayError, ValueError):
    """Invalid system or sweep configuration.

    Parameters
    ----------
    message : str
        Human readable description.
    line, column : int, optional
        Location in the configuration text (1-based) when the error comes
        from parsing a configuration file.
    """

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column or 1}: {message}"
        super().__init__(message)


class DomainError(RelayError, ValueError):
    """A closed-form quantity is undefined for the given parameters."""


class ConditioningError(RelayError, ArithmeticError):
    """A Gram matrix is too ill-conditioned for zero-forcing.

    The estimated condition number is kept in ``condition``.
    """

    def __init__(self, message, condition=float("inf")):
        self.condition = condition
        super().__init__(f"{message} (condition number {condition:.3e})")


class SimulationFailed(RelayError, RuntimeError):
    """A Monte Carlo run could not produce a usable estimate."""


class InvalidSample(RelayError, ValueError):
    """A sampler produced a value outside its declared support."""
