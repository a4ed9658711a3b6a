"""Exception types shared across the package."""


class BetaTargetsError(Exception):
    """Base class for all package errors."""


class DomainError(BetaTargetsError, ValueError):
    """An argument lies outside the domain of an operation."""


class PreconditionError(BetaTargetsError, ValueError):
    """A documented precondition of an operation does not hold."""


class ResourceError(BetaTargetsError, RuntimeError):
    """A configured enumeration or tiling cap would be exceeded."""


class IndeterminateError(BetaTargetsError, ArithmeticError):
    """The working precision is too low to decide a predicate."""


class UnsupportedError(BetaTargetsError, NotImplementedError):
    """The requested mode is outside the supported parameter families."""


class PlanError(BetaTargetsError, ValueError):
    """An experiment configuration failed validation.

    ``errors`` holds ``(path, message)`` pairs.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{p}: {m}" if p else m for p, m in self.errors))
