"""Exception hierarchy shared by all modules."""


class AtlasError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(AtlasError):
    pass


class NotPositiveSemidefinite(AtlasError):
    """Raised when a matrix required to be PSD (e.g. the state cost) is not."""


class NotPositiveDefinite(AtlasError):
    """Raised when a matrix required to be PD (e.g. the control cost) is not."""


class SingularA(AtlasError):
    """Discrete-time dynamics matrix is (numerically) singular."""


class WrongMode(AtlasError):
    """Operation applied to a system in the wrong time mode / discount state."""


class ConvergenceFailure(AtlasError):
    """An iterative numerical routine failed to converge."""


class SingularRBPB(AtlasError):
    """R + B'PB is singular; no discrete gain can be formed."""


class NonFiniteState(AtlasError):
    """A simulated state became NaN or Inf."""


class DegenerateCost(AtlasError):
    """Every sample in a batch had near-zero running cost."""


class TrainingDiverged(AtlasError):
    """Training produced a non-finite loss or state.

    Attributes:
        epoch: index of the epoch in which divergence was detected.
    """

    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


class EnumerationCapExceeded(AtlasError):
    """State dimension too large for exhaustive subspace enumeration."""
