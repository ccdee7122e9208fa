"""Exception types raised by the library."""


class OpWeightError(ValueError):
    """Base class for all domain errors."""


class NotPositive(OpWeightError):
    pass


class NotAdjointable(OpWeightError):
    pass


class NoRepresentative(OpWeightError):
    pass


class NotInH(OpWeightError):
    """The map is not dominated by the reference weight."""


class NotCompletelyPositive(OpWeightError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotDenselyDefined(OpWeightError):
    pass


class SeedInconsistent(OpWeightError):
    pass


class IllDefined(OpWeightError):
    pass


class NotSurjective(OpWeightError):
    pass


class ZeroLambdaExactMode(OpWeightError):
    pass


class GammaOutOfRange(OpWeightError):
    pass


class DominationViolated(OpWeightError):
    pass


class NotMonotone(OpWeightError):
    pass


class NotPositiveFunctional(OpWeightError):
    pass
