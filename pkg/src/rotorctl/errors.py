"""Exception hierarchy shared by the library and the command-line runner."""


class RotorError(Exception):
    """Base class for every error raised by :mod:`rotorctl`."""


class DomainError(RotorError, ValueError):
    """An argument lies outside the domain of the operation."""


class UnsupportedInputError(RotorError, ValueError):
    """The operation is well defined but not implemented for this input kind."""


class NumericError(RotorError, ArithmeticError):
    """A numerical routine failed or an internal consistency check tripped."""


class BasisOverflowError(NumericError):
    """Population leaked into the top of the truncated rotational basis.

    Raised by the propagators; the remedy is a larger ``j_cap``.
    """


class ConfigError(RotorError):
    """Malformed or incomplete scenario configuration."""
