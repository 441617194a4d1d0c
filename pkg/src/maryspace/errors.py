"""Exception hierarchy.

Everything derives from :class:`MarySpaceError`.  Numerical failures are
kept apart from bad input so the CLI can map them onto different exit codes.
"""


class MarySpaceError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(MarySpaceError, ValueError):
    """An argument lies outside the domain of the operation."""


class NumericalError(MarySpaceError, ArithmeticError):
    """A numerical procedure failed to reach its target accuracy."""


class ConvergenceFailure(NumericalError):
    pass


class IllConditioned(NumericalError):
    pass


class NoSuchRoot(DomainError):
    pass


class PoleError(DomainError):
    pass


class NegativeBase(DomainError):
    pass


class DuplicateKey(DomainError):
    pass


class TooLarge(DomainError):
    pass


class OutOfRange(DomainError):
    pass


class SizeMismatch(DomainError):
    pass


class NotContractive(DomainError):
    pass
