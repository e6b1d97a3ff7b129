"""Exception types shared across the package."""


class PnflowError(Exception):
    """Base class for all pnflow errors."""


class InvalidArgument(PnflowError):
    pass


class InvalidSpec(PnflowError):
    pass


class OutOfDomain(PnflowError):
    pass


class SolverFailure(PnflowError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateState(PnflowError):
    pass


class SingularConfiguration(PnflowError):
    pass


class SingularMatrix(PnflowError):
    pass


class StepFailure(PnflowError):
    pass


class TrackLoss(PnflowError):
    pass


class InvalidWindow(PnflowError):
    pass


class AccuracyWarning(UserWarning):
    pass
