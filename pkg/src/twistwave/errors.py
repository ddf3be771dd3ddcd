"""Exception hierarchy.

``ConfigError`` maps to CLI exit code 2, every ``NumericalError`` to exit 3.
"""


class TwistWaveError(Exception):
    pass


class ConfigError(TwistWaveError):
    pass


class NumericalError(TwistWaveError):
    pass


class GridTooCoarse(NumericalError):
    pass


class NoConvergence(NumericalError):
    def __init__(self, iterations, message=None):
        self.iterations = iterations
        super().__init__(message or f"eigensolver did not converge after {iterations} iterations")


class NonPositiveCurvature(NumericalError):
    pass


class BoundViolation(NumericalError):
    def __init__(self, momenta, message=None):
        self.momenta = list(momenta)
        super().__init__(message or f"mass bound violated at p = {self.momenta}")


class QuotientViolation(NumericalError):
    pass


class NonPositiveGroundState(NumericalError):
    pass


class NotConverged(NumericalError):
    pass


class TruncationUnstable(NumericalError):
    pass


class DimensionCap(NumericalError):
    pass


class FactorizationFailure(NumericalError):
    pass


class DomainError(ValueError, TwistWaveError):
    pass


class InsufficientData(NumericalError):
    pass


class RegimeMismatch(TwistWaveError):
    pass
