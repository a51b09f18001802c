"""Exception hierarchy shared by all analysis modules."""


class SensographError(Exception):
    """Base class for every error raised by this package."""


class ParseError(SensographError, ValueError):
    """A row of a panel file could not be read.

    Parameters
    ----------
    message : str
        What went wrong.
    line : int, optional
        1-based line number in the source stream.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(SensographError, ValueError):
    """The panel file is well formed but its product sets disagree."""


class DomainError(SensographError, ValueError):
    """An argument lies outside the domain of an operation."""


class DegenerateBlockError(DomainError):
    """A tablecloth has no spread (all samples placed at one point)."""


class UndefinedCoefficientError(DomainError):
    """An agreement coefficient is undefined (zero variance or zero configuration)."""
