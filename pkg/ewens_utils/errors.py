"""Exception types shared by the estimation and simulation code."""

__all__ = ['EwensError', 'DomainError', 'ResourceError', 'SolverError', 'ConfigError', 'ExperimentError']


class EwensError(Exception):
    pass


class DomainError(EwensError, ValueError):
    """An argument lies outside the domain of the requested quantity."""


class ResourceError(EwensError, RuntimeError):
    """A request exceeds a configured size cap (enumeration, Stirling table)."""


class SolverError(EwensError, RuntimeError):
    """A root solve could not be trusted: no convergence or several sign changes."""


class ConfigError(EwensError, ValueError):
    pass


class ExperimentError(EwensError, RuntimeError):
    """One or more replications aborted; partial summaries are kept."""

    def __init__(self, message: str, summaries=None, diagnostics=None):
        super().__init__(message)
        self.summaries = summaries if summaries is not None else []
        self.diagnostics = diagnostics if diagnostics is not None else []
