"""Exception types shared across the package."""


class TrajthermError(Exception):
    """Base class for all package errors."""


class DimensionError(TrajthermError):
    """Operands have incompatible Hilbert-space dimensions."""


class InvalidState(TrajthermError):
    """A matrix or vector does not satisfy the state invariants."""


class SupportError(TrajthermError):
    """supp(rho) is not contained in supp(sigma); relative entropy diverges."""


class ParameterError(TrajthermError):
    """A physical parameter is out of its admissible range."""


class UnitarityError(TrajthermError):
    """A matrix expected to be unitary is not."""


class DivisionByZeroOutcome(TrajthermError):
    """Time reversal requested for an outcome with zero forward probability."""


class NotCoarseGrainable(TrajthermError):
    """Kraus operators in one outcome class are not proportional, so the
    grouped evolution cannot be tracked with pure states."""


class ImpossibleOutcome(TrajthermError):
    """A measurement backaction annihilates the state (probability below floor)."""


class EnumerationTooLarge(TrajthermError):
    """Exhaustive path enumeration would exceed the path-count guard."""


class StepSizeError(TrajthermError):
    """Master-equation integration lost positivity; reduce the time step."""


class ModelBuildError(TrajthermError):
    """A scenario builder could not construct a model meeting its tolerance."""
