"""Exception types shared across the package."""


class SimBayesError(Exception):
    """Base class for all package-specific errors."""


class InvalidArgumentError(SimBayesError, ValueError):
    """An argument violates a documented precondition."""


class SimulationDivergedError(SimBayesError):
    """A simulator produced a non-finite or explosively large value.

    The estimation layer treats this as zero likelihood rather than a
    fatal condition, so the failing step (and replication, when known)
    is carried for diagnostics.
    """

    def __init__(self, message, step=None, replication=None):
        super().__init__(message)
        self.step = step
        self.replication = replication


class DegenerateSampleError(SimBayesError):
    """A sample has zero spread and no kernel bandwidth can be fitted."""


class TrainingDivergedError(SimBayesError):
    """The network loss became non-finite during training."""

    def __init__(self, message, epoch=None, batch=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


class ConfigError(SimBayesError):
    """A run configuration failed schema or semantic validation."""
