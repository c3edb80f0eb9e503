"""Exception hierarchy shared by all modules."""


class BartnikError(Exception):
    """Base class for package errors."""


class ConfigurationError(BartnikError, ValueError):
    """Inconsistent grid, coefficient, or run configuration."""


class DomainError(BartnikError, ValueError):
    """Parameter outside the domain of an operation."""


class InfeasibleError(BartnikError):
    """A solvability or feasibility requirement failed."""


class PathConstructionError(InfeasibleError):
    """The conformal path could not be built consistently."""


class ConstructionError(BartnikError):
    """A collar hypothesis is violated."""


class NoBranchError(BartnikError):
    """Neither the nonnegative-curvature nor the large-H construction applies."""
