"""Semantic exception hierarchy.

Every error carries the CLI exit code of its category:

    2  validation errors (malformed input, broken invariants of user data)
    3  domain errors (the mathematics refuses: ties, theta out of range, ...)
    4  resource-cap errors (a requested exhaustive computation is too large)
"""


class MvrhoError(Exception):
    exit_code = 1


class ValidationError(MvrhoError):
    """Structurally invalid input: bad CSV, bad flags, broken family, ..."""

    exit_code = 2


class DomainError(MvrhoError):
    """Input is well-formed but outside the mathematical domain."""

    exit_code = 3


class ResourceCapError(MvrhoError):
    """Exhaustive evaluation would exceed the enforced size cap."""

    exit_code = 4


class TiesPresent(DomainError):
    """Tied values in a column: the continuity assumption is violated."""


class UnsupportedKind(DomainError):
    """Operation defined only for a subset of statistic kinds."""


class TooLarge(ResourceCapError):
    pass


class MissingClosedForm(DomainError):
    """Closed-form integrals requested for a dependence function without them."""


class SingularIntegrand(DomainError):
    """Plain Gauss rule requested for an integrand unbounded at the faces."""


class DegenerateModel(DomainError):
    """Fisher information vanishes; efficiencies are undefined."""


class DivisionByZeroSlope(DomainError):
    pass


class EfficiencyBoundExceeded(MvrhoError):
    """An absolute efficiency above 1 can only be a bug, never data."""


class NotUpward(ValidationError):
    """Family of subsets is not closed under taking supersets."""


class OutOfDomain(DomainError):
    """Point outside the unit cube."""


class UnboundedScore(DomainError):
    """The density perturbation is unbounded; the requested bound/sampler
    does not exist for this dependence function."""


class BadCorrelation(DomainError):
    pass


class ThetaTooLarge(DomainError):
    """Association parameter beyond the validity bound of the model."""


class DegenerateMeasure(DomainError):
    """The constraint integral cannot be normalized (lambda = 0)."""


class InvalidDependence(ValidationError):
    """A custom dependence function failed mandatory validation."""
