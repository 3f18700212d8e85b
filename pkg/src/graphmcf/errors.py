"""Exception types shared by the solvers, monitors and command line."""


class ConfigurationError(ValueError):
    """Bad configuration or initial data."""


class BlowupError(RuntimeError):
    """A flow produced a non-finite value.

    ``index`` is the offending grid index, ``t`` the time of the failed step.
    Solvers attach the last valid state and the partial time series when the
    error escapes ``run``.
    """

    def __init__(self, message, index=None, t=None):
        super().__init__(message)
        self.index = index
        self.t = t
        self.state = None
        self.series = []


class InsufficientSamplesError(ValueError):
    """A density probe does not hold enough samples for extrapolation."""


class PreconditionError(ValueError):
    """An operation was called outside its stated precondition."""


class DomainError(ValueError):
    """A kernel or density was evaluated at or after its singular time."""
