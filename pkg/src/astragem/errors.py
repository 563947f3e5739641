"""Exception types shared across the package."""


class AstragemError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(AstragemError):
    """An operation received tensors with incompatible shapes."""


class NonFiniteError(AstragemError):
    """An operation produced NaN or Inf; raised at the op that produced it."""


class FormatError(AstragemError):
    """A file (graph container, checkpoint, report) is malformed or has an unknown version."""


class DataError(AstragemError):
    """Invalid data: bad adjacency matrix, unusable edge list, empty dataset."""


class TrainingAborted(AstragemError):
    """Training hit a non-finite loss; the last checkpoint is retained."""

    def __init__(self, iteration, message):
        super().__init__(f"training aborted at iteration {iteration}: {message}")
        self.iteration = iteration


class SamplingError(AstragemError):
    """Langevin dynamics hit a non-finite energy gradient."""

    def __init__(self, step, message):
        super().__init__(f"sampling aborted at step {step}: {message}")
        self.step = step
