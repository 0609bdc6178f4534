"""Exception types shared across the pipeline."""


class FishnavError(Exception):
    pass


class InvalidInputError(FishnavError, ValueError):
    pass


class DegenerateGeometryError(FishnavError):
    pass


class ConvergenceError(FishnavError):
    """Raised when an iterative solver exhausts its budget.

    ``diagnostics`` carries the solver state at the point of failure
    (iteration count, last cost, last step norm, damping).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class EmptySeedError(FishnavError):
    pass


class ConfigError(FishnavError):
    pass


class StageError(FishnavError):
    """Wraps any failure inside a pipeline stage with the stage name."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
