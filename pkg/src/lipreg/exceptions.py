"""Error types shared across the package."""


class LipregError(Exception):
    """Base class for all package errors."""


class DataError(LipregError):
    """Invalid input data: malformed CSV, bad labels, inconsistent distances."""


class DomainError(LipregError):
    """A point lies outside the open domain required by an evaluation."""


class ConditioningError(LipregError):
    """A matrix that must be symmetric positive definite failed to factor."""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class InvariantError(LipregError):
    """An internal contract was violated; carries the solver trace if any."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class CertificateError(LipregError):
    """Certificate requested in a state where it is undefined (t = 0)."""


class OracleError(LipregError):
    """Reference solver failed to converge within its iteration budget."""


class ModelError(LipregError):
    """Model document is malformed or violates a model invariant."""
