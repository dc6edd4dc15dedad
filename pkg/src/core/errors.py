"""
Exception hierarchy for the toolkit.

Every error raised on purpose by the library derives from MMLError, so callers
(the CLI in particular) can map failures onto exit codes without inspecting
messages.
"""


class MMLError(Exception):
    """Base class for all toolkit errors."""


class DomainError(MMLError, ValueError):
    """An argument lies outside the domain of the operation."""


class OutOfDomainError(DomainError):
    """A series or transform was evaluated outside its convergence region."""


class MomentDoesNotExistError(DomainError):
    """The requested (fractional) moment is infinite."""


class NumericFailure(MMLError, ArithmeticError):
    """
    A numerical method failed to reach its tolerance.

    Attributes:
        candidates (tuple): Competing values produced by the methods that
            disagreed, if any.
    """

    def __init__(self, message: str, candidates: tuple = ()):
        super().__init__(message)
        self.candidates = tuple(candidates)

    def __str__(self) -> str:
        base = super().__str__()
        if not self.candidates:
            return base
        shown = ", ".join(repr(c) for c in self.candidates)
        return f"{base} (candidates: {shown})"


class ModelError(MMLError, ValueError):
    """A representation violates one of its structural invariants."""


class DegenerateDistributionError(ModelError):
    """The requested functional is almost surely zero."""


class ConfigError(MMLError, ValueError):
    """A configuration file, grid string or command line could not be parsed."""
