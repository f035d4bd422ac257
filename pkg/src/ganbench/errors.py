"""Exception types shared across the package."""


class GanBenchError(Exception):
    pass


class InvalidArgumentError(GanBenchError, ValueError):
    pass


class InfeasibleSceneError(GanBenchError):
    """Rejection sampling could not place the requested shapes."""


class InvalidAnnotationError(GanBenchError, ValueError):
    pass


class InvalidSpecError(GanBenchError, ValueError):
    pass


class UnsupportedArchitectureError(GanBenchError):
    pass


class IncompatibleCheckpointError(GanBenchError):
    pass


class NumericalError(GanBenchError, FloatingPointError):
    """A loss went non-finite during training."""

    def __init__(self, message: str, last_checkpoint: str | None = None):
        super().__init__(message)
        self.last_checkpoint = last_checkpoint
