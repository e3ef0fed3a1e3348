"""Exception hierarchy shared by every module."""


class ScpWalkError(Exception):
    """Base class for all errors raised by the package."""


class ConstructionError(ScpWalkError, ValueError):
    """A measure or generator could not be built from its description."""


class ValidationError(ScpWalkError, ValueError):
    """An object violates one of its stated invariants."""


class DomainError(ScpWalkError, ValueError):
    """An argument lies outside the domain of the operation."""

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload


class SplitError(DomainError):
    """A coordinate split produced an empty block."""


class PreconditionError(ScpWalkError, ValueError):
    """The caller violated a documented precondition."""


class CeilingError(PreconditionError):
    """Exhaustive enumeration was refused because the dimension is too large."""


class InfeasibleCouplingError(ScpWalkError):
    """No coupling with the required support exists (the SCP fails)."""

    def __init__(self, message, instance=None):
        super().__init__(message)
        self.instance = instance


class ReducibleError(ScpWalkError, ValueError):
    """The generator has more than one communicating class."""

    def __init__(self, message, classes=()):
        super().__init__(message)
        self.classes = list(classes)


class EstimationError(ScpWalkError):
    """Numerical search for a functional constant produced nothing usable."""


class ConvergenceError(ScpWalkError):
    """An iterative procedure hit its iteration cap."""
