"""Exception hierarchy shared across survkit."""


class SurvkitError(Exception):
    """Base class for all survkit errors."""


class DataError(SurvkitError, ValueError):
    """Input data cannot be used as given."""


class SchemaError(DataError):
    """A required column or covariate name is missing or mismatched."""


class ParseError(DataError):
    """A CSV cell could not be parsed."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class ValidationError(DataError):
    """A parsed value violates a domain invariant."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class DegenerateDataError(DataError):
    """The data carry no information for the requested fit (e.g. no events)."""


class DomainError(SurvkitError, ValueError):
    """A parameter lies outside the domain of the distribution."""


class ConvergenceError(SurvkitError, RuntimeError):
    """Newton iterations failed to converge.

    The last iterate and its log-likelihood are kept so callers can
    inspect or persist the partial result.
    """

    def __init__(self, message, params=None, loglik=None, iterations=0, result=None):
        super().__init__(message)
        self.params = params
        self.loglik = loglik
        self.iterations = iterations
        self.result = result
