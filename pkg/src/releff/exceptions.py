"""Custom exceptions for releff."""
from typing import Any


class ReleffError(Exception):
    """Base exception for all releff errors."""

    pass


class ReleffWarning(UserWarning):
    """Flagged condition that does not stop the computation."""

    pass


# Configuration errors


class ConfigurationError(ReleffError):
    """Raised when configuration is invalid or inconsistent."""

    pass


class UnsupportedForBootstrap(ConfigurationError):
    """Raised when the double bootstrap is asked for a fully adjusted estimator."""

    pass


class UnsupportedStrategy(ConfigurationError):
    """Raised when a nuisance strategy cannot be used with the given covariates."""

    pass


# Data errors


class DataError(ReleffError):
    """Raised when input data violate a precondition."""

    pass


class EmptyFile(DataError):
    """Raised when a CSV file has no data rows."""

    pass


class MissingColumn(DataError):
    """Raised when a required CSV column is absent."""

    pass


class BadLevel(DataError):
    """Raised when an outcome or covariate value is outside its declared levels."""

    pass


class NonFiniteValue(DataError):
    """Raised when a numeric cell is missing, NaN or infinite."""

    pass


class NoEvents(DataError):
    """Raised when a survival dataset has no observed event."""

    pass


class EmptyArm(DataError):
    """Raised when a treatment arm has no observations."""

    pass


class BadPi(DataError):
    """Raised when the treatment probability is outside (0, 1)."""

    pass


class EmptyRiskSet(DataError):
    """Raised when no observation is at risk at a grid time that is needed."""

    def __init__(self, j: int, message: str | None = None) -> None:
        self.j = j
        super().__init__(message or f"Empty risk set at grid index {j}")


class TooFewObservations(DataError):
    """Raised when a procedure needs more observations than supplied."""

    pass


class DegenerateOutcome(DataError):
    """Raised when the unadjusted variance is zero."""

    pass


class BoundaryCDF(DataError):
    """Raised when a cumulative probability needed on the logit scale is 0 or 1."""

    pass


class DegenerateSurvival(DataError):
    """Raised when the marginal survivor is 0 or 1 where a variance needs it inside."""

    pass


class MismatchedBundles(DataError):
    """Raised when variance components were computed on different observations."""

    pass


# Numerical errors


class NumericalError(ReleffError):
    """Raised when a numerical procedure fails."""

    pass


class SingularDesign(NumericalError):
    """Raised when a design matrix does not have full column rank."""

    pass


class NonConvergence(NumericalError):
    """Raised when an iterative solver reaches its iteration cap."""

    pass


class SeparationDetected(NumericalError):
    """Raised when fitted coefficients diverge; carries the last finite iterate."""

    def __init__(self, message: str, fit: Any = None) -> None:
        self.fit = fit
        super().__init__(message)


class NonConvergedFit(NumericalError):
    """Raised when a downstream computation receives a fit that did not converge."""

    pass


class ModelRangeViolation(NumericalError):
    """Raised when conditional-mean predictions leave the range of the target."""

    pass


class ZeroCensoringSurvivor(NumericalError):
    """Raised when the censoring survivor is zero for an observation at risk."""

    pass


class ZeroDenominator(NumericalError):
    """Raised when a trial censoring survivor used as a divisor is zero."""

    def __init__(self, j: int, i: int) -> None:
        self.j = j
        self.i = i
        super().__init__(f"Zero denominator at grid index {j}, observation {i}")


class LogitRangeViolation(NumericalError):
    """Raised when a logit-scale interval is requested for an estimate outside (0, 1)."""

    pass


class TooManyInvalidReplicates(NumericalError):
    """Raised when too few inner bootstrap replicates are valid."""

    pass


class DegenerateDenominator(NumericalError):
    """Raised when all unadjusted bootstrap estimates coincide."""

    pass


class QuadratureNonConvergence(NumericalError):
    """Raised when Gauss-Legendre refinement does not settle."""

    pass
