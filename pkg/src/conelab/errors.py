"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input violates a documented precondition (bad measure, bad range, ...)."""


class PreconditionError(ValueError):
    """A structural precondition of an operation does not hold."""


class CapacityError(RuntimeError):
    """Problem size exceeds an explicit enumeration or solver cap."""


class UnsupportedError(RuntimeError):
    """Requested configuration is out of the implemented scope."""


class InternalFault(RuntimeError):
    """Two independent computations of the same quantity disagree."""
