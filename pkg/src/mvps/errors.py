"""Exception types shared across the package."""


class MvpsError(ValueError):
    pass


class ZeroMass(MvpsError):
    pass


class ZeroMassBlock(ZeroMass):
    pass


class OutOfRange(MvpsError):
    pass


class HorizonExceeded(MvpsError):
    pass


class NotConstantMass(MvpsError):
    pass


class Degenerate(MvpsError):
    pass


class NotSufficient(MvpsError):
    pass


class ThetaFitWarning(MvpsError):
    """Base for the two ways a one-dimensional theta fit can fail to be interior."""

    def __init__(self, message, theta=None, log_likelihood=None):
        super().__init__(message)
        self.theta = theta
        self.log_likelihood = log_likelihood


class EdgeMaximum(ThetaFitWarning):
    pass


class Flat(ThetaFitWarning):
    pass
