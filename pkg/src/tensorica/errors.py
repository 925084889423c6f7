"""Exception hierarchy shared by all tensorica modules."""


class TensoricaError(Exception):
    """Base class for every error raised by this package."""


class InvalidDimensionError(TensoricaError, ValueError):
    pass


class InvalidDistributionError(TensoricaError, ValueError):
    pass


class DegenerateVectorError(TensoricaError, ArithmeticError):
    """Raised when a vector with (numerically) zero norm must be normalized.

    ``iteration`` is filled in by the solver when the failure happens
    inside a run.
    """

    def __init__(self, message, iteration=None):
        if iteration is not None:
            message = f"{message} (at iteration t={iteration})"
        super().__init__(message)
        self.iteration = iteration


class ScheduleInfeasibleError(TensoricaError, ValueError):
    pass


class InvalidInstanceError(TensoricaError, ValueError):
    pass


class HypothesisViolatedError(TensoricaError, ValueError):
    """The premise of the reversed Gronwall inequality does not hold."""


class InvalidSamplerError(TensoricaError, ValueError):
    pass


class EstimateFailedError(TensoricaError, RuntimeError):
    pass


class InfeasibleDimensionError(TensoricaError, ValueError):
    pass


class FitFailedError(TensoricaError, RuntimeError):
    pass


class ConfigError(TensoricaError, ValueError):
    pass
