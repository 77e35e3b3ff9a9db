"""Exception types raised by the library."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class OracleSizeError(ValueError):
    """The dense brute-force oracle was asked for a too-large representation."""


class DegeneratePosteriorError(ArithmeticError):
    """Every grid node of a posterior has zero likelihood."""


class UnreachableLevelError(ValueError):
    """A confidence level exceeds the total posterior mass."""


class DivisibilityError(ValueError):
    """A particle budget cannot be split into the requested number of runs."""


class FitError(ValueError):
    """Too few or degenerate points for a power-law fit."""
