"""Exception hierarchy shared by every fapchan module.

The concrete classes subclass the matching builtin so callers catching
``ValueError`` or ``RuntimeError`` keep working.
"""


class FapChannelError(Exception):
    """Base class for all fapchan errors."""


class ParameterError(FapChannelError, ValueError):
    """Invalid channel, simulation, grid or quadrature configuration."""


class DomainError(FapChannelError, ValueError):
    """Argument outside the domain of a function."""


class GridError(FapChannelError, ValueError):
    """Grid constraints violated for the requested boundary value problem."""


class QuadratureError(FapChannelError, RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class SolverError(FapChannelError, RuntimeError):
    """Linear solver did not reach the requested residual."""
