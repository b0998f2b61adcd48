"""Exception hierarchy shared by all modules."""


class BellRatioError(Exception):
    """Base class for every error raised by this package."""


class DomainError(BellRatioError, ValueError):
    """An argument lies outside the domain of a formula."""


class UnsupportedGeometryError(BellRatioError, ValueError):
    """Angular correlation requested away from the two supported slices."""


class InconsistentConfigError(BellRatioError, ValueError):
    """The configured marginals cannot be completed to a valid distribution."""


class IncompleteBundleError(BellRatioError, KeyError):
    """A probability bundle lacks a term required by an expression."""


class DegenerateDenominatorError(BellRatioError, ZeroDivisionError):
    """The normalizing coincidence sum of the ratio form is zero."""


class InvalidInstanceError(BellRatioError, ValueError):
    """Theorem inputs violate their box constraints."""
